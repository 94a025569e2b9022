"""Surface vocabulary for synthetic statement generation.

Sentence atoms pair a subject with a verb phrase; each verb phrase is
stored with its ready-made negation so rendering never has to conjugate.
QA worlds pair an object phrase with an attribute; attribute values are
split into a plausible pool (used as ground-truth values) and an
implausible pool (used as distractors), mirroring how scene-graph VQA
corpora draw wrong answers from off-scene attributes.
"""

from __future__ import annotations

SUBJECTS = [
    "the violinist", "the gardener", "a tall man", "the young woman", "the mail carrier",
    "a street vendor", "the lifeguard", "an old sailor", "the barista", "a schoolteacher",
    "the carpenter", "a jogger in red", "the night watchman", "a small child", "the tour guide",
    "an elderly couple", "the bus driver", "a stray dog", "the librarian", "a fisherman",
    "the baker", "a pair of dancers", "the electrician", "a young artist", "the shepherd",
    "a waiter", "the photographer", "a farmer", "the mechanic", "a nurse",
    "the chess player", "a cyclist", "the florist", "a plumber", "the tailor",
    "a drummer", "the beekeeper", "a skater", "the welder", "a potter",
]

# (affirmative, negated) verb phrases, third person singular.
VERB_PHRASES = [
    ("walks along the river", "does not walk along the river"),
    ("is waiting for the tram", "is not waiting for the tram"),
    ("carries a wicker basket", "does not carry a wicker basket"),
    ("is outside in the rain", "is not outside in the rain"),
    ("plays an accordion", "does not play an accordion"),
    ("wears a straw hat", "does not wear a straw hat"),
    ("is climbing the ladder", "is not climbing the ladder"),
    ("feeds the pigeons", "does not feed the pigeons"),
    ("is resting on a bench", "is not resting on a bench"),
    ("sells fruit at the market", "does not sell fruit at the market"),
    ("is reading a newspaper", "is not reading a newspaper"),
    ("repairs the old fence", "does not repair the old fence"),
    ("is singing near the fountain", "is not singing near the fountain"),
    ("holds a blue umbrella", "does not hold a blue umbrella"),
    ("is sweeping the stairs", "is not sweeping the stairs"),
    ("paints the garden wall", "does not paint the garden wall"),
    ("is crossing the square", "is not crossing the square"),
    ("waters the window boxes", "does not water the window boxes"),
    ("is sketching the harbor", "is not sketching the harbor"),
    ("stacks crates by the door", "does not stack crates by the door"),
    ("is jogging past the bakery", "is not jogging past the bakery"),
    ("ties up the rowboat", "does not tie up the rowboat"),
    ("is watching the parade", "is not watching the parade"),
    ("sharpens a kitchen knife", "does not sharpen a kitchen knife"),
    ("is leaning on the railing", "is not leaning on the railing"),
    ("photographs the bridge", "does not photograph the bridge"),
    ("is buying a train ticket", "is not buying a train ticket"),
    ("trims the hedge out front", "does not trim the hedge out front"),
    ("is talking to a neighbor", "is not talking to a neighbor"),
    ("packs a canvas bag", "does not pack a canvas bag"),
    ("is standing in the doorway", "is not standing in the doorway"),
    ("rakes the fallen leaves", "does not rake the fallen leaves"),
    ("is rehearsing a speech", "is not rehearsing a speech"),
    ("polishes a brass lamp", "does not polish a brass lamp"),
    ("is waving at the ferry", "is not waving at the ferry"),
    ("mends a torn sail", "does not mend a torn sail"),
    ("is dozing under the oak", "is not dozing under the oak"),
    ("counts coins at the till", "does not count coins at the till"),
    ("is hauling a water jug", "is not hauling a water jug"),
    ("sets the outdoor tables", "does not set the outdoor tables"),
    ("is tuning a guitar", "is not tuning a guitar"),
    ("folds the clean linens", "does not fold the clean linens"),
    ("is herding the goats", "is not herding the goats"),
    ("lights the porch lantern", "does not light the porch lantern"),
    ("is rolling out dough", "is not rolling out dough"),
    ("stamps the parcel labels", "does not stamp the parcel labels"),
    ("is pushing a handcart", "is not pushing a handcart"),
    ("shovels snow off the path", "does not shovel snow off the path"),
]

OBJECT_ADJECTIVES = [
    "oak", "small", "antique", "folding", "painted", "narrow", "wide", "round",
    "square", "heavy", "wooden", "metal", "tall", "short", "old", "new",
    "plain", "carved", "sturdy", "slim", "rustic", "modern", "vintage", "corner",
]

OBJECT_NOUNS = [
    "desk", "chair", "table", "cabinet", "shelf", "bench", "stool", "dresser",
    "couch", "lamp", "mirror", "vase", "rug", "clock", "crate", "chest",
    "door", "gate", "fence", "kettle", "teapot", "basket", "ladder", "easel",
    "bicycle", "wagon", "umbrella", "jacket", "scarf", "hat",
]

# Per-attribute value pools: (plausible ground-truth values, implausible
# distractor values).  The pools are disjoint so a distractor never
# doubles as another world's true value.
ATTRIBUTES = {
    "color": (
        ["brown", "black", "white", "gray", "red", "blue", "green", "beige"],
        ["pink", "purple", "orange", "maroon", "teal", "violet", "magenta", "turquoise"],
    ),
    "material": (
        ["wooden", "metal", "plastic", "leather", "stone", "wicker", "steel", "cotton"],
        ["velvet", "marble", "porcelain", "bamboo", "rubber", "denim", "cork", "felt"],
    ),
    "pattern": (
        ["plain", "striped", "checkered", "dotted", "solid", "bordered", "ribbed", "paneled"],
        ["floral", "paisley", "zigzag", "swirled", "speckled", "herringbone", "argyle", "marbled"],
    ),
}

ATTRIBUTE_NAMES = sorted(ATTRIBUTES)
