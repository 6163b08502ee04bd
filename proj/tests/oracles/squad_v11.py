#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Reference EM/F1 scoring, identical to the official SQuAD v1.1 evaluate script.

Run to regenerate tests/data/squad_fixture.json, squad_predictions.json and
squad_expected.json. The C++ tests compare against the frozen outputs.
"""
import json
import re
import string
import sys
from collections import Counter
from pathlib import Path


def normalize_answer(s):
    def remove_articles(text):
        return re.sub(r'\b(a|an|the)\b', ' ', text)

    def white_space_fix(text):
        return ' '.join(text.split())

    def remove_punc(text):
        exclude = set(string.punctuation)
        return ''.join(ch for ch in text if ch not in exclude)

    def lower(text):
        return text.lower()

    return white_space_fix(remove_articles(remove_punc(lower(s))))


def f1_score(prediction, ground_truth):
    prediction_tokens = normalize_answer(prediction).split()
    ground_truth_tokens = normalize_answer(ground_truth).split()
    common = Counter(prediction_tokens) & Counter(ground_truth_tokens)
    num_same = sum(common.values())
    if num_same == 0:
        return 0
    precision = 1.0 * num_same / len(prediction_tokens)
    recall = 1.0 * num_same / len(ground_truth_tokens)
    f1 = (2 * precision * recall) / (precision + recall)
    return f1


def exact_match_score(prediction, ground_truth):
    return normalize_answer(prediction) == normalize_answer(ground_truth)


def metric_max_over_ground_truths(metric_fn, prediction, ground_truths):
    return max(metric_fn(prediction, gt) for gt in ground_truths)


def evaluate(dataset, predictions):
    f1 = exact_match = total = 0
    per_question = {}
    for article in dataset:
        for paragraph in article['paragraphs']:
            for qa in paragraph['qas']:
                total += 1
                ground_truths = [a['text'] for a in qa['answers']]
                prediction = predictions.get(qa['id'], '')
                em = metric_max_over_ground_truths(exact_match_score, prediction, ground_truths)
                f = metric_max_over_ground_truths(f1_score, prediction, ground_truths)
                per_question[qa['id']] = {'em': float(em), 'f1': float(f)}
                exact_match += em
                f1 += f
    return {'exact_match': 100.0 * exact_match / total, 'f1': 100.0 * f1 / total,
            'per_question': per_question}


CONTEXT_A = ("Super Bowl 50 was an American football game. The American Football Conference (AFC) "
             "champion Denver Broncos defeated the National Football Conference (NFC) champion "
             "Carolina Panthers 24–10 to earn their third Super Bowl title. The game was played "
             "on February 7, 2016, at Levi's Stadium in the San Francisco Bay Area at Santa Clara, "
             "California.")
CONTEXT_B = ("Frédéric Chopin, born in Żelazowa Wola, was a Polish composer. "
             "He wrote Études and Nocturnes; the “Revolutionary” Étude is famous. "
             "STRAßE signs and the café — an old one — line the street, "
             "and the İstanbul tour costs £50.")

# (context, golds, prediction). Golds are verbatim substrings of the context.
CASES = [
    (CONTEXT_A, ["Denver Broncos"], "Denver Broncos"),
    (CONTEXT_A, ["Denver Broncos"], "Broncos"),
    (CONTEXT_A, ["Denver Broncos"], "the Denver Broncos"),
    (CONTEXT_A, ["Denver Broncos"], "denver broncos."),
    (CONTEXT_A, ["Carolina Panthers"], "Panthers, Carolina"),
    (CONTEXT_A, ["24–10"], "24–10"),
    (CONTEXT_A, ["24–10"], "24-10"),
    (CONTEXT_A, ["24–10"], "24 10"),
    (CONTEXT_A, ["February 7, 2016"], "February 7 2016"),
    (CONTEXT_A, ["February 7, 2016", "2016"], "2016"),
    (CONTEXT_A, ["February 7, 2016", "February 7"], "7 February"),
    (CONTEXT_A, ["Levi's Stadium"], "Levis Stadium"),
    (CONTEXT_A, ["Levi's Stadium"], "Levi 's Stadium"),
    (CONTEXT_A, ["Santa Clara, California"], "Santa Clara"),
    (CONTEXT_A, ["Santa Clara, California"], "California"),
    (CONTEXT_A, ["San Francisco Bay Area"], "the San Francisco Bay Area at Santa Clara"),
    (CONTEXT_A, ["American Football Conference"], "AFC"),
    (CONTEXT_A, ["American Football Conference", "AFC"], "(AFC)"),
    (CONTEXT_A, ["third Super Bowl title"], "their third Super Bowl title"),
    (CONTEXT_A, ["third"], "a third"),
    (CONTEXT_A, ["Super Bowl 50"], "Super  Bowl   50"),
    (CONTEXT_A, ["Super Bowl 50"], "super bowl fifty"),
    (CONTEXT_A, ["an American football game"], "American football"),
    (CONTEXT_A, ["an American football game"], "football game football game"),
    (CONTEXT_A, ["National Football Conference"], "the the National"),
    (CONTEXT_A, ["Denver Broncos"], ""),
    (CONTEXT_A, ["Carolina Panthers"], "Denver Broncos"),
    (CONTEXT_A, ["Denver Broncos", "Broncos", "champion Denver Broncos"], "Broncos team"),
    (CONTEXT_A, ["Levi's Stadium"], "Levi’s Stadium"),
    (CONTEXT_A, ["champion Denver Broncos"], "champion; Denver -- Broncos!"),
    (CONTEXT_B, ["Frédéric Chopin"], "frédéric chopin"),
    (CONTEXT_B, ["Frédéric Chopin"], "FRÉDÉRIC CHOPIN"),
    (CONTEXT_B, ["Frédéric Chopin"], "Frederic Chopin"),
    (CONTEXT_B, ["Żelazowa Wola"], "żelazowa wola"),
    (CONTEXT_B, ["Polish composer"], "a Polish composer"),
    (CONTEXT_B, ["Études and Nocturnes"], "études, nocturnes"),
    (CONTEXT_B, ["“Revolutionary” Étude"], "Revolutionary Étude"),
    (CONTEXT_B, ["“Revolutionary” Étude"], "“revolutionary” étude"),
    (CONTEXT_B, ["STRAßE signs"], "straße signs"),
    (CONTEXT_B, ["STRAßE signs"], "strasse signs"),
    (CONTEXT_B, ["the café"], "café"),
    (CONTEXT_B, ["café — an old one"], "café an old one"),
    (CONTEXT_B, ["café — an old one"], "café — old one"),
    (CONTEXT_B, ["İstanbul tour"], "İstanbul tour"),
    (CONTEXT_B, ["İstanbul tour"], "istanbul tour"),
    (CONTEXT_B, ["£50"], "50"),
    (CONTEXT_B, ["£50"], "£ 50"),
    (CONTEXT_B, ["Chopin"], "Chopin²"),
    (CONTEXT_B, ["Nocturnes"], "the_Nocturnes"),
    (CONTEXT_B, ["Polish composer", "composer"], "An Polish-composer"),
]


def build():
    paragraphs = {}
    predictions = {}
    for i, (context, golds, pred) in enumerate(CASES):
        qid = "q%02d" % i
        answers = []
        for g in golds:
            start = context.find(g)
            assert start >= 0, (g, context)
            answers.append({"text": g, "answer_start": start})
        paragraphs.setdefault(context, []).append(
            {"id": qid, "question": "Question %d?" % i, "answers": answers})
        predictions[qid] = pred
    data = [{"title": "Fixture",
             "paragraphs": [{"context": c, "qas": q} for c, q in paragraphs.items()]}]
    return {"version": "1.1", "data": data}, predictions


def main(out_dir):
    out = Path(out_dir)
    assert len(CASES) == 50
    dataset, predictions = build()
    result = evaluate(dataset["data"], predictions)
    for qid, pred in predictions.items():
        golds = [a["text"] for p in dataset["data"][0]["paragraphs"] for q in p["qas"]
                 if q["id"] == qid for a in q["answers"]]
        both_empty = normalize_answer(pred) == "" and any(normalize_answer(g) == "" for g in golds)
        assert not both_empty, qid
    (out / "squad_fixture.json").write_text(json.dumps(dataset, ensure_ascii=False, indent=1) + "\n")
    (out / "squad_predictions.json").write_text(
        json.dumps(predictions, ensure_ascii=False, indent=1) + "\n")
    (out / "squad_expected.json").write_text(json.dumps(result, indent=1, sort_keys=True) + "\n")
    print(json.dumps({"exact_match": result["exact_match"], "f1": result["f1"]}))


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "data")
