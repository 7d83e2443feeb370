"""Closed word lists for the three generator families."""
from __future__ import annotations

import itertools

_ONSETS = ["", "b", "d", "f", "g", "j", "l", "n", "r", "s", "t", "v", "w", "y", "z",
           "br", "gr", "st", "sh", "sl", "dr", "kr", "pr", "tr"]
_VOWELS = ["a", "e", "i", "o", "u"]
_CODAS = ["mpus", "rpus"]


def pseudowords(limit: int | None = None) -> list[str]:
    """Category nouns built from an onset + vowel + coda grammar ("wumpus", "lorpus", ...)."""
    words = [o + v + c for c, o, v in itertools.product(_CODAS, _ONSETS, _VOWELS)]
    return words[:limit] if limit is not None else words


def plural(noun: str) -> str:
    return noun + "es" if noun.endswith("s") else noun + "s"


def article(noun: str) -> str:
    return "an" if noun[0] in "aeiou" else "a"


PRONTO_ATTRIBUTES = [
    "opaque", "sour", "bitter", "bright", "cold", "hot", "dull", "large", "small", "red",
    "blue", "green", "happy", "sad", "wooden", "metallic", "liquid", "transparent",
    "luminous", "fruity", "spicy", "floral", "kind", "angry", "aggressive", "feisty",
    "mean", "nervous", "shy", "earthy", "sweet", "slow", "fast", "temperate", "rainy",
    "windy", "snowy", "orange", "brown", "melodic", "amenable", "sunny",
]

PRONTO_NAMES = [
    "Polly", "Sam", "Alex", "Fae", "Max", "Rex", "Sally", "Stella", "Wren", "Sophie",
    "Tom", "Lily", "Jack", "Nora",
]

PARARULE_NAMES = [
    "Harry", "Anne", "Gary", "Fiona", "Bob", "Charlie", "Dave", "Erin", "Alan", "Bella",
    "Chris", "Diana", "Eric", "Grace",
]

PARARULE_ATTRIBUTES = [
    "strong", "big", "high", "huge", "smart", "quiet", "kind", "nice", "wealthy", "thin",
    "little", "short", "small", "poor", "rough", "sad", "bad", "dull", "clever", "wise",
    "tall", "heavy", "old", "young", "rich", "tiny", "weak", "slim", "lean", "fat",
    "brave", "calm", "gentle", "proud", "loud", "shy", "bold", "quick", "slow", "famous",
]

# (base form, third-person form) of activity predicates for yes/no questions
MLE_ACTIVITIES = [
    ("use a fishing rod", "uses a fishing rod"),
    ("catch fish", "catches fish"),
    ("study hard", "studies hard"),
    ("pass the exam", "passes the exam"),
    ("go to the gym", "goes to the gym"),
    ("get stronger", "gets stronger"),
    ("drink coffee", "drinks coffee"),
    ("stay awake", "stays awake"),
    ("read books", "reads books"),
    ("gain knowledge", "gains knowledge"),
    ("water the plants", "waters the plants"),
    ("practice the piano", "practices the piano"),
    ("play music", "plays music"),
    ("eat vegetables", "eats vegetables"),
    ("stay healthy", "stays healthy"),
    ("save money", "saves money"),
    ("buy a house", "buys a house"),
    ("walk the dog", "walks the dog"),
    ("feel happy", "feels happy"),
    ("bake bread", "bakes bread"),
    ("cook dinner", "cooks dinner"),
    ("ride a bike", "rides a bike"),
    ("wear a helmet", "wears a helmet"),
    ("write code", "writes code"),
    ("fix bugs", "fixes bugs"),
    ("travel abroad", "travels abroad"),
    ("learn languages", "learns languages"),
    ("wake up early", "wakes up early"),
    ("see the sunrise", "sees the sunrise"),
    ("paint pictures", "paints pictures"),
    ("visit museums", "visits museums"),
    ("plant trees", "plants trees"),
    ("help neighbors", "helps neighbors"),
    ("run marathons", "runs marathons"),
    ("sleep well", "sleeps well"),
    ("win prizes", "wins prizes"),
]

MLE_NAMES = [
    "Michael", "Sarah", "John", "Emma", "David", "Olivia", "James", "Sophia", "Daniel",
    "Mia", "Lucas", "Ava", "Henry", "Chloe", "Ethan", "Zoe",
]


def activity_id(base: str) -> str:
    return base.replace(" ", "_")


ACTIVITY_FORMS = {activity_id(b): (b, t) for b, t in MLE_ACTIVITIES}
