"""Synthetic desk-scale corpora written in the two dialogue file formats.

The generators emit the exact on-disk layouts the parsers expect: numbered
tab-split text files for the restaurant task and scenario JSON for the in-car
assistant, plus the matching entity tables. Values are drawn from small pools
so the tasks stay learnable at toy model sizes; the OOV split swaps in held
out cuisines and locations to stress copying.
"""

import json
import os

import numpy as np

CUISINES = ["british", "cantonese", "french", "indian", "italian", "japanese"]
OOV_CUISINES = ["korean", "spanish", "thai", "vietnamese"]
LOCATIONS = ["beijing", "bombay", "london", "madrid", "paris", "rome"]
OOV_LOCATIONS = ["hanoi", "seoul", "tokyo", "manila"]
NUMBERS = ["two", "four", "six", "eight"]
PRICES = ["cheap", "moderate", "expensive"]

GREETINGS = ["hi", "hello", "good morning"]
REQUESTS = ["can you make a restaurant reservation",
            "can you book a table",
            "i'd like to book a table",
            "may i have a table"]
SLOT_ORDER = ("cuisine", "location", "number", "price")
REQUEST_PART = {
    "cuisine": ["with {} cuisine", "with {} food"],
    "location": ["in {}"],
    "number": ["for {} people"],
    "price": ["in a {} price range"],
}
QUESTIONS = {
    "cuisine": "any preference on a type of cuisine",
    "location": "where should it be",
    "number": "how many people would be in your party",
    "price": "which price range are looking for",
}
ANSWERS = {
    "cuisine": ["with {} food", "i love {} food"],
    "location": ["in {}", "{} sounds good"],
    "number": ["for {} people", "we will be {}"],
    "price": ["in a {} price range please", "{} price range"],
}


def _choice(rng, seq):
    return seq[int(rng.integers(len(seq)))]


def build_t1_dialogue(rng, oov=False):
    """One restaurant-booking dialogue as (user, system) exchange pairs."""
    values = {
        "cuisine": _choice(rng, OOV_CUISINES if oov else CUISINES),
        "location": _choice(rng, OOV_LOCATIONS if oov else LOCATIONS),
        "number": _choice(rng, NUMBERS),
        "price": _choice(rng, PRICES),
    }
    given = [s for s in SLOT_ORDER if rng.random() < 0.5]
    missing = [s for s in SLOT_ORDER if s not in given]
    request = " ".join([_choice(rng, REQUESTS)]
                       + [_choice(rng, REQUEST_PART[s]).format(values[s]) for s in given])
    ex = [(_choice(rng, GREETINGS), "hello what can i help you with today"),
          (request, "i'm on it")]
    reply = "<SILENCE>"
    for slot in missing:
        ex.append((reply, QUESTIONS[slot]))
        reply = _choice(rng, ANSWERS[slot]).format(values[slot])
    ex.append((reply, "ok let me look into some options for you"))
    api = "api_call {cuisine} {location} {number} {price}".format(**values)
    ex.append(("<SILENCE>", api))
    return ex


def render_babi(dialogues):
    lines = []
    for ex in dialogues:
        for i, (user, system) in enumerate(ex, 1):
            lines.append(f"{i} {user}\t{system}")
        lines.append("")
    return "\n".join(lines) + "\n"


def write_babi_task1(out_dir, n_train=1000, n_dev=1000, n_test=1000, n_oov=1000, seed=13):
    """Write the four task-1 split files plus entities.json; returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {}
    splits = [("trn", n_train, False), ("dev", n_dev, False),
              ("tst", n_test, False), ("tst-OOV", n_oov, True)]
    for si, (suffix, count, oov) in enumerate(splits):
        rng = np.random.default_rng([seed, si])
        text = render_babi(build_t1_dialogue(rng, oov) for _ in range(count))
        path = os.path.join(out_dir, f"dialog-babi-task1-API-calls-{suffix}.txt")
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
        paths[suffix] = path
    entities = {
        "r_cuisine": CUISINES + OOV_CUISINES,
        "r_location": LOCATIONS + OOV_LOCATIONS,
        "r_number": NUMBERS,
        "r_price": PRICES,
    }
    ent_path = os.path.join(out_dir, "entities.json")
    with open(ent_path, "w", encoding="utf-8") as f:
        json.dump(entities, f, indent=1)
    paths["entities"] = ent_path
    return paths


NAV_TYPES = {
    "gas station": ["valero", "chevron", "shell station"],
    "coffee or tea place": ["starbucks", "coupa", "philz", "peets coffee"],
    "chinese restaurant": ["panda express", "pf changs", "mandarin roots"],
    "pizza restaurant": ["pizza hut", "round table", "dominos"],
    "grocery store": ["whole foods", "safeway", "willows market"],
    "hospital": ["stanford express care", "el camino hospital"],
    "parking garage": ["civic center garage", "webster garage"],
    "friends house": ["toms house", "jills house", "jacks house"],
}
ADDRESSES = ["200 alester ave", "783 arcadia pl", "383 university ave",
             "271 springer street", "580 van ness ave", "899 ames ct",
             "5672 barringer street", "842 arrowhead way", "657 ames ave",
             "434 arastradero rd", "409 bollard st", "81 amherst st"]
DISTANCES = ["1 miles", "2 miles", "3 miles", "4 miles", "5 miles", "6 miles"]
TRAFFIC = ["no traffic", "moderate traffic", "heavy traffic",
           "road block nearby", "car collision nearby"]

WEATHER_CITIES = ["boston", "cleveland", "san francisco", "los angeles", "new york",
                  "seattle", "chicago", "miami", "carson", "durham"]
WEEKDAYS = ["monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"]
CONDITIONS = ["raining", "sunny", "cloudy", "foggy", "snowing", "windy",
              "clear skies", "overcast", "hail", "hot"]
TEMPERATURES = ["20f", "30f", "40f", "50f", "60f", "70f", "80f", "90f", "100f"]

EVENTS = ["dentist appointment", "doctor appointment", "yoga activity",
          "swimming activity", "football activity", "lab appointment",
          "dinner", "conference", "meeting", "optometrist appointment"]
TIMES = ["9am", "10am", "11am", "1pm", "2pm", "3pm", "4pm", "5pm", "6pm", "7pm"]
DATES = ["the 1st", "the 2nd", "the 4th", "the 5th", "the 7th", "the 8th",
         "the 10th", "the 11th", "the 13th", "the 15th"]
PARTIES = ["boss", "alex", "jon", "sister", "mother", "father", "marie",
           "ana", "executive team", "hr"]
ROOMS = ["conference room 100", "conference room 50", "meeting room 102"]
AGENDAS = ["discuss dress code", "go over budget", "onboarding", "discuss the merger"]

MEETING_EVENTS = {"conference", "meeting"}


def _turn(speaker, utterance):
    return {"turn": speaker, "data": {"utterance": utterance, "end_dialogue": False}}


def _nav_scenario(rng, uuid):
    target_type = _choice(rng, sorted(NAV_TYPES))
    other_types = [t for t in sorted(NAV_TYPES) if t != target_type]
    rng.shuffle(other_types)
    row_types = [target_type] + other_types[: int(rng.integers(3, 6))]
    addrs = list(ADDRESSES)
    rng.shuffle(addrs)
    items, target = [], None
    for t, addr in zip(row_types, addrs):
        row = {"poi": _choice(rng, NAV_TYPES[t]),
               "distance": _choice(rng, DISTANCES),
               "traffic_info": _choice(rng, TRAFFIC),
               "poi_type": t,
               "address": addr}
        items.append(row)
        if t == target_type:
            target = row
    ex = [(_choice(rng, ["where is the nearest {poi_type}",
                         "give me directions to the nearest {poi_type}",
                         "find me a {poi_type}"]).format(**target),
           _choice(rng, ["the nearest {poi_type} is {poi} , {distance} away",
                         "there is {poi} {distance} away with {traffic_info}"]).format(**target))]
    if rng.random() < 0.7:
        ex.append((_choice(rng, ["what is the address", "what's the address"]),
                   "{poi} is located at {address}".format(**target)))
    if rng.random() < 0.5:
        ex.append((_choice(rng, ["thanks", "thank you"]), "you're welcome"))
    kb = {"items": items,
          "column_names": ["poi", "distance", "traffic_info", "poi_type", "address"],
          "kb_title": "location information"}
    return _scenario_json(uuid, "navigate", kb, ex)


def _weather_scenario(rng, uuid):
    focus = _choice(rng, WEATHER_CITIES)
    others = [c for c in WEATHER_CITIES if c != focus]
    rng.shuffle(others)
    days = list(WEEKDAYS)
    rng.shuffle(days)
    items = []
    for day in days[:3]:
        items.append({"location": focus, "day": day,
                      "condition": _choice(rng, CONDITIONS),
                      "temperature": _choice(rng, TEMPERATURES)})
    for city in others[:2]:
        items.append({"location": city, "day": _choice(rng, WEEKDAYS),
                      "condition": _choice(rng, CONDITIONS),
                      "temperature": _choice(rng, TEMPERATURES)})
    target = items[int(rng.integers(3))]
    ex = [(_choice(rng, ["what is the weather in {location} on {day}",
                         "what will it be like in {location} on {day}"]).format(**target),
           _choice(rng, ["it will be {condition} in {location} on {day}",
                         "{location} will have {condition} on {day}"]).format(**target))]
    if rng.random() < 0.6:
        ex.append((_choice(rng, ["how about the temperature", "and the temperature"]),
                   "the temperature in {location} will be {temperature} on {day}".format(**target)))
    if rng.random() < 0.5:
        ex.append((_choice(rng, ["thanks", "thank you"]), "you're welcome"))
    kb = {"items": items,
          "column_names": ["location", "day", "condition", "temperature"],
          "kb_title": "weekly forecast"}
    return _scenario_json(uuid, "weather", kb, ex)


def _schedule_scenario(rng, uuid):
    events = list(EVENTS)
    rng.shuffle(events)
    items = []
    for ev in events[: int(rng.integers(3, 6))]:
        meeting = ev in MEETING_EVENTS
        items.append({"event": ev,
                      "time": _choice(rng, TIMES),
                      "date": _choice(rng, DATES),
                      "party": _choice(rng, PARTIES),
                      "room": _choice(rng, ROOMS) if meeting else "-",
                      "agenda": _choice(rng, AGENDAS) if meeting else "-"})
    target = items[0]
    if rng.random() < 0.5:
        ex = [("what time is my {event}".format(**target),
               "your {event} is at {time}".format(**target))]
    else:
        ex = [("when is my {event}".format(**target),
               "your {event} is on {date} at {time}".format(**target))]
    if rng.random() < 0.5:
        ex.append((_choice(rng, ["who will attend", "who is going"]),
                   "{party} will attend the {event}".format(**target)))
    if rng.random() < 0.5:
        ex.append((_choice(rng, ["thanks", "thank you"]), "you're welcome"))
    kb = {"items": items,
          "column_names": ["event", "time", "date", "party", "room", "agenda"],
          "kb_title": "calendar"}
    return _scenario_json(uuid, "schedule", kb, ex)


def _scenario_json(uuid, intent, kb, exchanges):
    turns = []
    for user, system in exchanges:
        turns.append(_turn("driver", user))
        turns.append(_turn("assistant", system))
    return {"scenario": {"kb": kb, "task": {"intent": intent}, "uuid": uuid},
            "dialogue": turns}


def write_smd(out_dir, n_train=2425, n_dev=302, n_test=304, seed=29):
    """Write the three in-car split files plus kvret_entities.json."""
    os.makedirs(out_dir, exist_ok=True)
    builders = [_nav_scenario, _weather_scenario, _schedule_scenario]
    paths = {}
    for si, (name, count) in enumerate([("train", n_train), ("dev", n_dev), ("test", n_test)]):
        rng = np.random.default_rng([seed, si])
        dialogues = [builders[i % 3](rng, f"synth-{name}-{i}") for i in range(count)]
        path = os.path.join(out_dir, f"kvret_{name}_public.json")
        with open(path, "w", encoding="utf-8") as f:
            json.dump(dialogues, f)
        paths[name] = path
    entities = {
        "poi": sorted({p for pool in NAV_TYPES.values() for p in pool}),
        "poi_type": sorted(NAV_TYPES),
        "address": ADDRESSES,
        "distance": DISTANCES,
        "traffic_info": TRAFFIC,
        "location": WEATHER_CITIES,
        "day": WEEKDAYS,
        "condition": CONDITIONS,
        "temperature": TEMPERATURES,
        "event": EVENTS,
        "time": TIMES,
        "date": DATES,
        "party": PARTIES,
        "room": ROOMS,
        "agenda": AGENDAS,
    }
    ent_path = os.path.join(out_dir, "kvret_entities.json")
    with open(ent_path, "w", encoding="utf-8") as f:
        json.dump(entities, f, indent=1)
    paths["entities"] = ent_path
    return paths
