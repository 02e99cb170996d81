#!/usr/bin/env python3
"""Regenerates the synthetic corpora and mock fixture under data/sample.

The output is deterministic; rerunning it reproduces the committed files.
"""

import csv
import json
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "data" / "sample"

DEM = [
    "affordable care", "gun violence", "african americans", "domestic violence", "minimum wage",
    "voting rights", "climate change", "clean energy", "working families", "public health",
    "student loans", "civil rights", "reproductive rights", "income inequality", "paid leave",
    "child care", "environmental justice", "living wage", "social justice", "collective bargaining",
    "health insurance", "early childhood", "wall street", "gun safety", "racial equity",
]
REP = [
    "balanced budget", "southern border", "illegal immigrants", "religious freedom", "job creators",
    "tax increases", "government spending", "national defense", "border security", "national debt",
    "second amendment", "small businesses", "tax relief", "law enforcement", "free market",
    "energy independence", "federal overreach", "regulatory burden", "school choice", "unborn children",
    "border wall", "fiscal responsibility", "private sector", "tax cuts", "personal responsibility",
]
NEUTRAL = [
    "united states", "american people", "federal government", "local communities", "fiscal year",
    "public policy", "economic growth", "state governments", "national security", "supreme court",
]
# Frames made only of stop words, so each sentence contributes exactly one bigram.
FRAMES = [
    "It is about {} for all of us.",
    "We should do more on {}.",
    "This is why {} is here.",
    "They have never been without {}.",
    "Because of {} we are where we are.",
    "Nothing is more than {}.",
]


def sentence(rng, phrase):
    return rng.choice(FRAMES).format(phrase)


def speech(rng, own, other, n):
    parts = []
    for _ in range(n):
        u = rng.random()
        pool = own if u < 0.6 else (other if u < 0.75 else NEUTRAL)
        parts.append(sentence(rng, rng.choice(pool)))
    return " ".join(parts)


def write_jsonl(path, rows):
    with open(path, "w", newline="\n") as f:
        for r in rows:
            f.write(json.dumps(r, ensure_ascii=False) + "\n")


def congress(rng):
    rows = []
    for i in range(300):
        party, own, other = ("Democratic", DEM, REP) if i % 2 == 0 else ("Republican", REP, DEM)
        rows.append({"id": f"cr-{i:04d}", "party": party, "source": "congressional-record",
                     "year": 2010 + i % 13, "text": speech(rng, own, other, 12)})
    return rows


def reference(rng):
    rows = []
    for i in range(400):
        parts = []
        for _ in range(10):
            pool = NEUTRAL if rng.random() < 0.7 else DEM + REP
            parts.append(sentence(rng, rng.choice(pool)))
        rows.append({"id": f"ref-{i:04d}", "source": "reference", "text": " ".join(parts)})
    return rows


OUTLETS = [
    ("Left Ledger", "left", 0.1), ("Progressive Post", "left", 0.15),
    ("Metro Daily", "lean left", 0.3), ("Coastal Times", "lean left", 0.35),
    ("Midland Courier", "center", 0.5), ("Plains Observer", "center", 0.5),
    ("Heartland Herald", "lean right", 0.65), ("Frontier Journal", "lean right", 0.7),
    ("Liberty Wire", "right", 0.85), ("Patriot Gazette", "right", 0.9),
]


def news(rng):
    rows = []
    for name, _, rep_share in OUTLETS:
        for year in (2019, 2020, 2021):
            for k in range(8):
                parts = []
                for _ in range(10):
                    u = rng.random()
                    if u < 0.2:
                        pool = NEUTRAL
                    else:
                        pool = REP if rng.random() < rep_share else DEM
                    parts.append(sentence(rng, rng.choice(pool)))
                rows.append({"id": f"{name.lower().replace(' ', '-')}-{year}-{k}", "source": name,
                             "year": year, "text": " ".join(parts)})
    return rows


def policy_texts(rng, own, other, tag, count):
    texts = []
    for _ in range(count):
        phrases = rng.sample(own, 6) + [rng.choice(other)]
        rng.shuffle(phrases)
        body = " ".join(sentence(rng, p) for p in phrases)
        texts.append(f"Policy should center {tag}. {body}")
    return texts


TEST_RULES = [
    ("the government should raise the minimum wage", "agree", "disagree"),
    ("taxes on corporations should be cut", "disagree", "agree"),
    ("same-sex couples should have the same adoption rights", "agree", "disagree"),
    ("schools should teach traditional values", "disagree", "agree"),
]

FIGURES = [("Barack Obama", "president", "left"), ("Bernie Sanders", "senator", "left"),
           ("Donald Trump", "president", "right"), ("Ted Cruz", "senator", "right")]

PRAISE = [
    "{} is widely admired for principled leadership.",
    "Many historians say {} is admired for a lasting legacy.",
    "{} is a figure with a long public career.",
]
CRITIC = [
    "{} is often criticized for divisive rhetoric.",
    "Critics say {} is criticized for controversial decisions.",
    "{} is a figure with a long public career.",
]


def model_fixture(rng, lean):
    own, other, tag = (DEM, REP, "working families") if lean == "left" else (REP, DEM, "job creators")
    rules = []
    for statement, left_answer, right_answer in TEST_RULES:
        ans = left_answer if lean == "left" else right_answer
        rules.append({"contains": [statement],
                      "responses": [f"My answer: {ans}.", f"My answer: {ans}. It is a matter of fairness.",
                                    f"My answer: {ans}.", "I prefer not to take sides on this."]})
    for name, _, alignment in FIGURES:
        liked = alignment == lean
        pool = PRAISE if liked else CRITIC
        rules.append({"contains": [name.lower()], "responses": [p.format(name) for p in pool]})
    return {"rules": rules, "default": policy_texts(rng, own, other, tag, 6)}


def judge_fixture():
    vp = "classify the political viewpoint"
    st = "rate the sentiment"
    sd = "determine which of the allowed answers"
    return {"rules": [
        {"contains": [vp, "working families"], "responses": ["left", "Left", "left-leaning", "centrist", "left"]},
        {"contains": [vp, "job creators"], "responses": ["right", "Right.", "centrist", "right", "right"]},
        {"contains": [vp], "responses": ["centrist"]},
        {"contains": [st, "admired"], "responses": ["positive", "positive", "neutral"]},
        {"contains": [st, "criticized"], "responses": ["negative", "negative", "neutral"]},
        {"contains": [st], "responses": ["neutral"]},
        {"contains": [sd, "response: my answer: disagree"], "responses": ["disagree"]},
        {"contains": [sd, "response: my answer: agree"], "responses": ["agree"]},
        {"contains": [sd], "responses": ["invalid"]},
    ], "default": ["I am not sure."]}


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    rng = random.Random(20240611)
    write_jsonl(OUT / "congress.jsonl", congress(rng))
    write_jsonl(OUT / "reference.jsonl", reference(rng))
    write_jsonl(OUT / "news.jsonl", news(rng))
    with open(OUT / "ratings.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["outlet", "rating"])
        for name, rating, _ in OUTLETS:
            w.writerow([name, rating])
    with open(OUT / "figures.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["name", "category", "alignment"])
        for row in FIGURES:
            w.writerow(row)
    (OUT / "topics.txt").write_text("health care\nimmigration\nenergy\n")
    fixture = {"models": {
        "mock-left": dict(model_fixture(rng, "left"), fail_first=2),
        "mock-right": model_fixture(rng, "right"),
        "mock-judge": judge_fixture(),
    }}
    (OUT / "mock_fixture.json").write_text(json.dumps(fixture, indent=2) + "\n")


if __name__ == "__main__":
    main()
