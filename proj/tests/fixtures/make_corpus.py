#!/usr/bin/env python3
"""Builds the synthetic GSM8K-format corpus and the mock script used by the
offline end-to-end tests.

    python3 make_corpus.py            # writes gsm8k_fixture.jsonl, mock_script.jsonl

Problems come from a handful of template families. The mock script makes 151
randomly chosen problems incorrect and the other 849 correct, and scripts
analyst replies with counts 75/50/17/5/4 over the incorrect ones.
"""
import json
import random
import sys
from pathlib import Path

HERE = Path(__file__).resolve().parent
NAMES = ["Ava", "Ben", "Chloe", "Dev", "Elena", "Farid", "Grace", "Hugo", "Ines", "Jamal",
         "Kira", "Liam", "Maya", "Noah", "Omar", "Priya", "Quinn", "Rosa", "Sam", "Tara"]
ITEMS = ["notebooks", "apples", "pencils", "stickers", "cupcakes", "marbles", "tickets", "candles"]


def cost(r, i):
    n, p, q, k = r.choice(NAMES), r.randint(2, 30), r.randint(3, 12), r.randint(2, 9)
    item = r.choice(ITEMS)
    total = p * q + k * 5
    question = (f"{n} buys {q} {item} at ${p} each and {k} gift bags at $5 each "
                f"for order #{i}. How much does {n} spend in total?")
    steps = [f"The {item} cost {q} * {p} = {p * q} dollars.",
             f"The gift bags cost {k} * 5 = {k * 5} dollars.",
             f"Adding both amounts gives {p * q} + {k * 5} = {total} dollars."]
    return question, [f"{q} * {p} = <<{q}*{p}={p*q}>>{p*q}", f"{k} * 5 = <<{k}*5={k*5}>>{k*5}"], total, steps


def ages(r, i):
    a, b = r.sample(NAMES, 2)
    x, d, y = r.randint(5, 40), r.randint(2, 15), r.randint(2, 10)
    total = (x + y) + (x + d + y)
    question = (f"{a} is {x} years old and {b} is {d} years older than {a} (family #{i}). "
                f"What will be the sum of their ages in {y} years?")
    steps = [f"{b} is currently {x} + {d} = {x + d} years old.",
             f"In {y} years, {a} will be {x + y} and {b} will be {x + d + y}.",
             f"Their combined age will be {x + y} + {x + d + y} = {total}."]
    return question, [f"{x}+{d}={x+d}"], total, steps


def rate(r, i):
    n = r.choice(NAMES)
    s, h, extra = r.randint(20, 70), r.randint(2, 8), r.randint(5, 40)
    total = s * h + extra
    question = (f"{n} drives at {s} miles per hour for {h} hours on trip #{i}, "
                f"then walks {extra} more miles. How many miles does {n} cover?")
    steps = [f"Distance equals speed times time, so the drive covers {s} * {h} = {s * h} miles.",
             f"Then {n} walks another {extra} miles.",
             f"So the total distance is {s * h} + {extra} = {total} miles."]
    return question, [f"{s}*{h}={s*h}"], total, steps


def percent(r, i):
    n = r.choice(NAMES)
    base, pct = r.randint(2, 50) * 20, r.choice([10, 15, 20, 25, 30, 40, 50])
    off = base * pct // 100
    total = base - off
    question = (f"A jacket in store #{i} costs ${base:,}. {n} gets a {pct}% discount. "
                f"How much does {n} pay?")
    steps = [f"The discount is {pct}% of {base}, which is {base} * {pct} / 100 = {off} dollars.",
             f"Subtracting the discount gives {base} - {off} = {total} dollars."]
    return question, [f"{base}*{pct}/100={off}"], total, steps


def combos(r, i):
    shirts, pants, banned = r.randint(3, 9), r.randint(2, 7), r.randint(1, 2)
    total = shirts * pants - banned
    question = (f"Closet #{i} has {shirts} shirts and {pants} pairs of pants. {banned} specific "
                f"shirt-and-pants pairings clash and are never worn. How many outfits are possible?")
    steps = [f"Without restrictions there are {shirts} * {pants} = {shirts * pants} outfits.",
             f"We must exclude the {banned} clashing pairings.",
             f"That leaves {shirts * pants} - {banned} = {total} outfits."]
    return question, [f"{shirts}*{pants}={shirts*pants}"], total, steps


def sequential(r, i):
    n = r.choice(NAMES)
    start, give, buy, share = r.randint(40, 120), r.randint(5, 20), r.randint(5, 30), r.randint(2, 4)
    left = start - give + buy
    total = left // share * share
    each = left // share
    question = (f"{n} has {start} marbles in jar #{i}, gives away {give}, buys {buy} more, and then "
                f"splits them into {share} equal bags as far as possible. How many marbles are bagged?")
    steps = [f"After giving some away, {n} has {start} - {give} = {start - give} marbles.",
             f"After buying more, {n} has {start - give} + {buy} = {left} marbles.",
             f"Each bag gets {left} / {share} rounded down, which is {each} marbles.",
             f"So {each} * {share} = {total} marbles are bagged."]
    return question, [f"{start}-{give}={start-give}"], total, steps


FAMILIES = [cost, ages, rate, percent, combos, sequential]
WRONG_STEPS = [
    "I will assume the answer needs to be doubled to account for both parts.",
    "It seems reasonable to guess that half of the amount is lost along the way.",
    "Let us also add an extra ten units that the problem probably implies.",
]


def build_corpus(count, seed):
    r = random.Random(seed)
    problems = []
    for i in range(count):
        fam = FAMILIES[i % len(FAMILIES)]
        question, work, answer, steps = fam(r, i)
        ans_text = f"{answer:,}" if answer >= 1000 else str(answer)
        rationale = "\n".join(work)
        problems.append({"question": question, "answer": f"{rationale}\n#### {ans_text}",
                         "_steps": steps, "_gold": answer})
    return problems




def main():
    count = 1000
    problems = build_corpus(count, seed=20240601)
    corpus = HERE / "gsm8k_fixture.jsonl"
    with corpus.open("w") as f:
        for p in problems:
            f.write(json.dumps({"question": p["question"], "answer": p["answer"]}) + "\n")

    # The whole corpus is sampled, so order does not affect which problems are
    # correct; scripting by index keeps the fixture independent of the sampler.
    r = random.Random(7)
    incorrect = set(r.sample(range(count), 151))
    categories = (["Reasoning Error"] * 75 + ["Calculation Error"] * 50 + ["Misinterpretation Error"] * 17
                  + [None] * 5 + ["Factual Invention"] * 4)
    r.shuffle(categories)
    rules = []
    cat_iter = iter(categories)
    for i, p in enumerate(problems):
        steps = list(p["_steps"])
        answer = p["_gold"]
        match = p["question"]
        if i in incorrect:
            at = r.randrange(len(steps))
            steps.insert(at, WRONG_STEPS[i % len(WRONG_STEPS)])
            answer = answer * 2 if answer != 0 else 7
            rules.append({"task": "generate", "match": match,
                          "response": json.dumps({"reasoning_steps": steps, "final_answer": answer})})
            cat = next(cat_iter)
            if cat is None:
                rules.append({"task": "diagnose", "match": match,
                              "response": "I am not sure which step is wrong here.",
                              "repair_response": "Still unsure; no single category fits."})
            else:
                rules.append({"task": "diagnose", "match": match,
                              "response": json.dumps({"first_error_step": at, "category": cat})})
        else:
            rules.append({"task": "generate", "match": match,
                          "response": json.dumps({"reasoning_steps": steps, "final_answer": answer})})
    with (HERE / "mock_script.jsonl").open("w") as f:
        for rule in rules:
            f.write(json.dumps(rule) + "\n")
    print(f"wrote {count} problems, {len(rules)} rules", file=sys.stderr)


if __name__ == "__main__":
    main()
