#!/usr/bin/env python3
"""Generates the bundled synthetic corpus, mock gateway script and labels.

Everything is invented. Output is deterministic for a given --seed.
"""
import argparse
import csv
import json
import random
from pathlib import Path

DONOR = "Sam"
OTHERS = ["Alex", "Jordan", "Riley", "Casey", "Morgan", "Quinn", "Avery", "Drew", "Jamie", "Reese"]

NEUTRAL = [
    "did you see the game last night",
    "lol same",
    "what time is practice tomorrow",
    "can you send me the homework",
    "ok thanks",
    "haha that meme was great",
    "brb dinner",
    "are you coming to the party",
    "my phone is almost dead",
    "nice",
    "i think it starts at 7",
    "see you at school",
]
DONOR_LINES = [
    "yeah for sure",
    "idk maybe",
    "lol",
    "ok",
    "i'll check",
    "sounds good",
    "wait what",
    "no way",
]
HOSTILE = [
    "you're such a loser nobody even likes you",
    "just stop talking, you're embarrassing",
    "everyone thinks you're pathetic",
    "nobody wants you at the party, stay home",
    "you look ridiculous in every picture",
    "go away, no one asked you",
]
EDGY = [
    "you're so dumb lol jk",
    "shut up haha",
    "omg you idiot i love you",
]
REPLIES = ["that's not cool", "why would you say that", "whatever", "stop"]


def minutes(n):
    return n * 60_000


def build(seed):
    rng = random.Random(seed)
    records, truth, script = [], [], []
    start = 1_700_000_000_000
    counter = 0
    conv_index = 0
    while len(records) < 200:
        conv_index += 1
        conv = f"synthetic-{conv_index:02d}"
        other = OTHERS[(conv_index - 1) % len(OTHERS)]
        ts = start + conv_index * 86_400_000
        length = min(rng.randint(14, 26), 200 - len(records))
        i = 0
        while i < length:
            counter += 1
            mid = f"{conv}:{counter:05d}"
            ts += minutes(rng.randint(1, 30))
            from_donor = rng.random() < 0.4
            if from_donor:
                text = "" if rng.random() < 0.05 else rng.choice(DONOR_LINES)
                records.append(dict(message_id=mid, conversation_id=conv, sender=DONOR, sender_role="donor",
                                    timestamp_ms=ts, text=text))
                i += 1
                continue
            roll = rng.random()
            if roll < 0.12:
                text, label = rng.choice(HOSTILE), 1
            elif roll < 0.20:
                text, label = rng.choice(EDGY), 0
            else:
                text, label = ("" if rng.random() < 0.05 else rng.choice(NEUTRAL)), 0
            records.append(dict(message_id=mid, conversation_id=conv, sender=other, sender_role="other",
                                timestamp_ms=ts, text=text))
            truth.append((mid, label))
            i += 1
            script.extend(classifier_script(rng, mid, label, roll < 0.20))
            if label == 1:
                script.extend(responder_script(rng, mid))
                # Sometimes the donor answers quickly, sometimes not at all.
                if rng.random() < 0.6 and i < length:
                    for _ in range(rng.randint(1, 2)):
                        if i >= length:
                            break
                        counter += 1
                        ts += minutes(rng.randint(1, 5))
                        records.append(dict(message_id=f"{conv}:{counter:05d}", conversation_id=conv, sender=DONOR,
                                            sender_role="donor", timestamp_ms=ts, text=rng.choice(REPLIES)))
                        i += 1
                else:
                    ts += 2 * 86_400_000
    return records, truth, script


def clf(template, mid, text):
    return dict(template_id=template, target_message_id=mid, completion_text=text)


def classifier_script(rng, mid, label, edgy):
    out = []
    if rng.random() < 0.05:
        # Unparseable first answer; the re-prompt gets a clean one.
        out.append(clf("clf_agent1", mid, "I am not sure how to answer this."))
    if label == 1:
        if rng.random() < 0.8:
            out.append(clf("clf_agent1", mid, "1. Insults the recipient directly."))
            agree = rng.random() < 0.85
            out.append(clf("clf_agent2", mid, "1. Repeated personal attack with intent to hurt." if agree
                           else "0. Reads as friendly teasing between peers."))
        else:
            out.append(clf("clf_agent1", mid, "0. Casual conversation."))
    elif edgy:
        out.append(clf("clf_agent1", mid, "1. Contains an insult."))
        agree = rng.random() < 0.3
        out.append(clf("clf_agent2", mid, "1. The insult seems serious." if agree
                       else "0. Joking tone, no intent to harm."))
    else:
        out.append(clf("clf_agent1", mid, "0. No hostility present."))
    return out


DRAFTS_OK = [
    "Response 1: hey that actually hurt\nResponse 2: not cool at all\nStrategies: 5\nReasoning: Sharing feelings shows the impact.",
    "Response 1: lol ok whatever you say\nStrategies: 6\nReasoning: Humor takes the sting out.",
    "Response 1: why would you even say that?\nResponse 2: seriously\nStrategies: 7\nReasoning: A question makes them reflect.",
    "Response 1: not cool, please stop\nStrategies: 8\nReasoning: Clear disagreement sets a boundary.",
]
DRAFT_LONG = ("Response 1: honestly i do not understand why you would ever say something this mean to anyone at all\n"
              "Response 2: stop\nResponse 3: please\nResponse 4: seriously stop\nStrategies: 5, 8\n"
              "Reasoning: Too long on purpose.")


def responder_script(rng, mid):
    out = []
    roll = rng.random()
    if roll < 0.1:
        out.append(clf("resp_agent1", mid, "Not sure."))
        out.append(clf("resp_agent1", mid, "Not sure."))
        out.append(clf("resp_agent1", mid, "Not sure."))
    else:
        out.append(clf("resp_agent1", mid, rng.choice(["5. Empathy can remind them words hurt.",
                                                        "6, 8. Humor plus a clear no.",
                                                        "7. A question invites reflection.",
                                                        "5, 8. Feelings and a boundary."])))
    draft_roll = rng.random()
    if draft_roll < 0.15:
        # Violations on every attempt: the responder must cap and truncate.
        out.extend(clf("resp_agent2", mid, DRAFT_LONG) for _ in range(3))
    elif draft_roll < 0.3:
        out.append(clf("resp_agent2", mid, DRAFT_LONG))
        out.append(clf("resp_agent2", mid, rng.choice(DRAFTS_OK)))
    else:
        out.append(clf("resp_agent2", mid, rng.choice(DRAFTS_OK)))
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=20240611)
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "data" / "synthetic")
    args = ap.parse_args()
    records, truth, script = build(args.seed)
    args.out.mkdir(parents=True, exist_ok=True)
    with open(args.out / "corpus.jsonl", "w", encoding="utf-8", newline="\n") as f:
        for r in records:
            f.write(json.dumps(r, ensure_ascii=False) + "\n")
    with open(args.out / "truth.csv", "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["message_id", "label"])
        w.writerows(truth)
    with open(args.out / "mock.jsonl", "w", encoding="utf-8", newline="\n") as f:
        for s in script:
            f.write(json.dumps(s, ensure_ascii=False) + "\n")
    print(f"{len(records)} messages, {sum(l for _, l in truth)} positives, {len(script)} script lines")


if __name__ == "__main__":
    main()
