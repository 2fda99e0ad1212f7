"""Deterministic synthetic corpus with no lead bias.

Each sample hides a handful of facts (sentences built from words unique
to that fact) at evenly spaced positions inside long filler text. Every
fact is stated a few times close together, so a term-frequency selector
can find it within its segment. The target is one sentence per fact.

Run ``python -m stagesum.synthetic OUT.jsonl`` to write the corpus.
"""

from __future__ import annotations

import argparse
import random

from .corpus import Sample, write_corpus

_ONSETS = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "kl", "st", "tr"]
_VOWELS = ["a", "e", "i", "o", "u", "ai", "ou"]
_FILLER_STOPS = ["the", "a", "of", "and", "to", "in", "with", "for", "on", "was", "is", "that", "by"]
_FACT_TEMPLATES = [
    "The {0} {1} was moved to the {2} by the {3} {4}.",
    "Everyone agreed that the {3} {4} handled the {0} {1} near the {2}.",
    "Later the {2} held the {0} {1} and the {3} {4} approved it.",
    "In the end the {0} {1} reached the {2} with the {3} {4}.",
]
_TARGET_TEMPLATE = "{0} {1} went toward {2} under {3} {4}."


def _words(rng: random.Random, count: int, syllables: tuple[int, int], taken: set[str]) -> list[str]:
    out = []
    while len(out) < count:
        word = "".join(
            rng.choice(_ONSETS) + rng.choice(_VOWELS) for _ in range(rng.randint(*syllables))
        )
        if word not in taken:
            taken.add(word)
            out.append(word)
    return out


def _filler_sentence(rng: random.Random, vocab: list[str]) -> str:
    length = rng.randint(10, 18)
    words = [rng.choice(_FILLER_STOPS) if rng.random() < 0.35 else rng.choice(vocab) for _ in range(length)]
    return " ".join(words).capitalize() + "."


def generate_corpus(
    seed: int = 7,
    n_samples: int = 50,
    target_tokens: tuple[int, int] = (4400, 5000),
    facts: int = 10,
    repeats: int = 3,
    query_every: int = 5,
) -> list[Sample]:
    rng = random.Random(seed)
    taken: set[str] = set(_FILLER_STOPS)
    filler_vocab = _words(rng, 3000, (2, 3), taken)
    samples = []
    for idx in range(n_samples):
        fact_words = [_words(rng, 5, (3, 4), taken) for _ in range(facts)]
        budget = rng.randint(*target_tokens)
        filler = []
        used = 0
        while used < budget:
            sent = _filler_sentence(rng, filler_vocab)
            filler.append(sent)
            used += len(sent.split()) + 1  # trailing period is its own token
        # remove filler to make room for the fact sentences (~13 tokens each)
        drop = (facts * repeats * 13) // 15
        filler = filler[: max(facts, len(filler) - drop)]

        slots: dict[int, list[str]] = {}
        for j, words in enumerate(fact_words):
            anchor = int((j + 0.5) * len(filler) / facts)
            for r in range(repeats):
                template = _FACT_TEMPLATES[(j + r) % len(_FACT_TEMPLATES)]
                slots.setdefault(min(len(filler), anchor + 2 * r), []).append(template.format(*words))
        source = []
        for pos in range(len(filler) + 1):
            source.extend(slots.get(pos, []))
            if pos < len(filler):
                source.append(filler[pos])

        target = " ".join(_TARGET_TEMPLATE.format(*words).capitalize() for words in fact_words)
        query = None
        if query_every and idx % query_every == 0:
            w = fact_words[rng.randrange(facts)]
            query = f"What happened to the {w[0]} {w[1]}?"
        split = "train" if idx < n_samples * 0.8 else ("dev" if idx < n_samples * 0.9 else "test")
        samples.append(Sample(f"syn-{idx:03d}", tuple(source), target, query, split))
    return samples


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("output")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--samples", type=int, default=50)
    args = parser.parse_args(argv)
    write_corpus(args.output, generate_corpus(seed=args.seed, n_samples=args.samples))


if __name__ == "__main__":
    main()
