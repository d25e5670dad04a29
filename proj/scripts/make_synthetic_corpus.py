#!/usr/bin/env python3
"""Regenerates the synthetic corpora under data/synthetic/.

The outputs are committed; this script documents how they were produced.
"""
import json
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "data" / "synthetic"

FILLER = (
    "the a of and in for with to on by from under using based model method approach system "
    "analysis study results data framework proposed performance evaluation design control "
    "algorithm network learning risk safety navigation maritime operation estimation "
    "simulation experiment detection planning structure dynamic optimal robust sensor"
).split()


def sentence(rng, keywords, n_words):
    words = [rng.choice(FILLER) for _ in range(n_words)]
    for k in keywords:
        words.insert(rng.randrange(len(words) + 1), k)
    return " ".join(words)


def k6_corpus():
    """Six keywords with distinct occurrence rates over 40 documents."""
    rates = {"alpha": 2.4, "bravo": 1.9, "charlie": 1.5, "delta": 1.1, "echo": 0.7, "foxtrot": 0.4}
    rng = random.Random(6)
    docs = []
    for j in range(40):
        kws = []
        for k, lam in rates.items():
            # Poisson draw by inversion
            n, p, u = 0, 2.718281828459045 ** -lam, rng.random()
            acc = p
            while u > acc:
                n += 1
                p *= lam / n
                acc += p
            kws += [k] * n
        rng.shuffle(kws)
        half = len(kws) // 3
        docs.append({
            "id": f"k6-{j:03d}",
            "title": sentence(rng, kws[:half], 6),
            "abstract": sentence(rng, kws[half:], 30),
            "pdf_url": f"https://example.org/k6/{j:03d}.pdf",
        })
    (OUT / "k6_taxonomy.txt").write_text(
        "# six independent keywords for exhaustive front checks\n"
        + "".join(f"{k}:\n" for k in rates)
    )
    with open(OUT / "k6_corpus.jsonl", "w") as f:
        for d in docs:
            f.write(json.dumps(d) + "\n")


ON_TOPIC = {
    "ship": 1.6, "vessel": 1.0, "boat": 0.3, "craft": 0.15,
    "collision": 1.4, "bump": 0.05, "fault": 0.6, "hit": 0.1, "impact": 0.5, "accident": 0.5,
    "component": 0.9, "gear": 0.2, "apparatus": 0.1, "device": 0.4, "equipment": 0.6,
    "autonomous": 1.3, "self-driving": 0.05, "self-navigating": 0.15, "unmanned": 0.7,
    "cargo": 1.1, "freighter": 0.2, "bulk": 0.3, "container": 0.5, "tanker": 0.3,
}

OFF_TOPICS = [
    # autonomous road vehicles
    {"autonomous": 1.4, "self-driving": 1.1, "collision": 0.6, "accident": 0.5, "impact": 0.3, "device": 0.2},
    # container orchestration software
    {"container": 1.5, "bulk": 0.4, "fault": 0.7, "component": 0.6, "device": 0.3, "equipment": 0.05},
    # unmanned aerial vehicles
    {"unmanned": 1.3, "craft": 0.6, "autonomous": 0.7, "collision": 0.4, "hit": 0.3, "gear": 0.2},
    # industrial machinery maintenance
    {"gear": 1.0, "equipment": 0.9, "apparatus": 0.4, "fault": 0.9, "component": 0.8, "impact": 0.3},
    # unrelated physics or biology
    {"impact": 0.4, "device": 0.3, "bump": 0.2, "bulk": 0.3},
]


def poisson(rng, lam):
    n, p = 0, 2.718281828459045 ** -lam
    acc, u = p, rng.random()
    while u > acc:
        n += 1
        p *= lam / n
        acc += p
    return n


def corpus200():
    rng = random.Random(200)
    docs = []
    for j in range(200):
        relevant = rng.random() < 0.45
        rates = ON_TOPIC if relevant else rng.choice(OFF_TOPICS)
        scale = rng.uniform(0.5, 1.5)
        kws = []
        for k, lam in rates.items():
            kws += [k] * poisson(rng, lam * scale)
        rng.shuffle(kws)
        cut = len(kws) // 4
        docs.append({
            "id": f"syn-{j:03d}",
            "title": sentence(rng, kws[:cut], 5).capitalize(),
            "abstract": sentence(rng, kws[cut:], 40).capitalize() + ".",
            "pdf_url": f"https://example.org/syn/{j:03d}.pdf",
            "relevant": relevant,
        })
    with open(OUT / "corpus200.jsonl", "w") as f:
        for d in docs:
            f.write(json.dumps(d) + "\n")
    return docs


def dup100(base):
    """First 99 documents of corpus200 plus one re-cased, re-spaced copy of doc 10."""
    docs = [dict(d) for d in base[:99]]
    planted = dict(base[10])
    planted["id"] = "syn-dup"
    planted["title"] = "  " + planted["title"].upper() + " "
    planted["abstract"] = planted["abstract"].replace(" ", "   ", 3)
    docs.insert(57, planted)
    with open(OUT / "corpus100_dup.jsonl", "w") as f:
        for d in docs:
            f.write(json.dumps(d) + "\n")


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    k6_corpus()
    dup100(corpus200())
