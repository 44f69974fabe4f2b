"""Freeze oracle metric values for the fixture test set.

Run once, before trusting the library's own metric code. The BLEU here is an
independent transliteration of the widely used corpus scorer (clipped n-gram
precisions, geometric mean, brevity penalty, zero on any empty order); the F1
counts are printed per sample so they can be checked by hand. Writes
tests/fixtures/metrics_fixture.json. Intentionally does NOT import glmp.
"""

import json
import math
import os

PAIRS = [
    # (hypothesis, reference)
    ("the nearest gas_station is valero 4_miles away",
     "the nearest gas_station is valero 4_miles away"),
    ("valero is located at 200_alester_ave",
     "valero is at 200_alester_ave"),
    ("it will be raining in cleveland on monday",
     "it will be cloudy in cleveland on monday"),
    ("your dentist_appointment is at 1pm",
     "your dentist_appointment is on the_5th at 1pm"),
    ("the the the the",
     "the forecast calls for rain"),
    ("there is heavy_traffic on the route to starbucks",
     "there is heavy_traffic on the way to starbucks"),
    ("what else can i help you with",
     "anything else today"),
    ("your meeting is at 2pm with boss in conference_room_100",
     "your meeting is at 2pm with boss in conference_room_100"),
    ("the temperature in boston will be 40f on friday",
     "the temperature in boston will be 40f on friday is expected"),
    ("you're welcome",
     "you're welcome"),
]


def bleu_reference(pairs):
    correct = {1: 0, 2: 0, 3: 0, 4: 0}
    total = {1: 0, 2: 0, 3: 0, 4: 0}
    length_translation = 0
    length_reference = 0
    for hyp, ref in pairs:
        h = hyp.split()
        r = ref.split()
        length_translation += len(h)
        length_reference += len(r)
        for n in range(1, 5):
            ref_grams = {}
            for i in range(len(r) - n + 1):
                gram = " ".join(r[i:i + n])
                ref_grams[gram] = ref_grams.get(gram, 0) + 1
            hyp_grams = {}
            for i in range(len(h) - n + 1):
                gram = " ".join(h[i:i + n])
                hyp_grams[gram] = hyp_grams.get(gram, 0) + 1
            for gram, count in hyp_grams.items():
                total[n] += count
                limit = ref_grams.get(gram, 0)
                correct[n] += count if count <= limit else limit
    log_sum = 0.0
    for n in range(1, 5):
        p = correct[n] / total[n] if total[n] > 0 else 0.0
        if p == 0.0:
            return 0.0, correct, total, length_translation, length_reference
        log_sum += math.log(p)
    if length_translation > length_reference:
        bp = 1.0
    else:
        bp = math.exp(1.0 - length_reference / length_translation)
    return 100.0 * bp * math.exp(log_sum / 4.0), correct, total, length_translation, length_reference


# F1 cases: small enough to verify the TP/FP/FN tally by eye.
ENTITY_TABLE = {
    "valero": "poi", "starbucks": "poi",
    "4_miles": "distance", "2_miles": "distance",
    "200_alester_ave": "address",
    "cleveland": "location", "boston": "location",
    "monday": "day", "friday": "day",
    "raining": "condition", "cloudy": "condition",
    "40f": "temperature",
    "dentist_appointment": "event", "meeting": "event",
    "1pm": "time", "2pm": "time",
    "the_5th": "date",
    "boss": "party",
    "conference_room_100": "room",
    "heavy_traffic": "traffic_info",
}

F1_CASES = [
    # (prediction tokens, gold entity set, domain)
    ("the nearest gas_station is valero 4_miles away".split(),
     ["valero", "4_miles"], "navigation"),                  # tp=2
    ("starbucks is 2_miles away".split(),
     ["starbucks", "4_miles"], "navigation"),               # tp=1 fp=1 fn=1
    ("it will be raining in cleveland on monday".split(),
     ["cloudy", "cleveland", "monday"], "weather"),         # tp=2 fp=1 fn=1
    ("the temperature will be 40f".split(),
     ["boston", "40f", "friday"], "weather"),               # tp=1 fn=2
    ("your meeting is at 2pm with boss".split(),
     ["meeting", "2pm", "boss", "conference_room_100"], "schedule"),  # tp=3 fn=1
    ("you're welcome".split(),
     [], "schedule"),                                       # nothing on either side
]


def f1_reference(cases, restrict=None):
    tp = fp = fn = 0
    for pred, gold, domain in cases:
        if restrict is not None and domain != restrict:
            continue
        gold = set(gold)
        found = {t for t in pred if t in ENTITY_TABLE}
        tp += len(gold & found)
        fp += len(found - gold)
        fn += len(gold - found)
    denom = 2 * tp + fp + fn
    return (2 * tp / denom if denom else 0.0), tp, fp, fn


def main():
    bleu, correct, total, c, r = bleu_reference(PAIRS)
    print(f"BLEU {bleu:.6f}  lengths c={c} r={r}")
    for n in range(1, 5):
        print(f"  {n}-gram: {correct[n]}/{total[n]}")
    out = {
        "pairs": [[h.split(), r.split()] for h, r in PAIRS],
        "bleu": bleu,
        "entity_table": ENTITY_TABLE,
        "f1_cases": [[p, g, d] for p, g, d in F1_CASES],
        "f1": {},
    }
    overall = f1_reference(F1_CASES)
    print(f"F1 overall {overall[0]:.6f} tp={overall[1]} fp={overall[2]} fn={overall[3]}")
    out["f1"]["overall"] = overall[0]
    for dom in ("navigation", "weather", "schedule"):
        score, tp, fp, fn = f1_reference(F1_CASES, restrict=dom)
        print(f"F1 {dom} {score:.6f} tp={tp} fp={fp} fn={fn}")
        out["f1"][dom] = score
    here = os.path.dirname(os.path.abspath(__file__))
    path = os.path.join(here, "..", "tests", "fixtures", "metrics_fixture.json")
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(out, f, indent=1)
    print("wrote", os.path.normpath(path))


if __name__ == "__main__":
    main()
