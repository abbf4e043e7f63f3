"""Builds tests/fixtures/metric_pairs.json: 50 tokenized hypothesis/reference
pairs covering repeats, stem-only matches, short inputs and disjoint pairs."""
import json
import random

BASE = [
    "cooking in aluminum foil causes alzheimer's disease",
    "six-year-old kids can be added as authorized users on all credit cards",
    "having a root canal can cause cancer",
    "root canal treatment causes cancer",
    "cyanocobalamin the most common form of vitamin b12 is toxic",
    "zelensky sold farmland to foreign companies",
    "drinking hot water with lemon cures covid-19",
    "the government is hiding the real death toll of the vaccine",
    "wearing masks reduces oxygen levels in the blood",
    "a video shows police arresting protesters in paris",
    "the president signed a law banning cash payments",
    "eating garlic prevents infection with the coronavirus",
    "5g towers spread the virus across europe",
    "bill gates wants to implant microchips through vaccines",
    "the moon landing was staged in a studio",
    "onions absorb viruses and cleanse the air in a room",
]
SWAPS = {
    "causes": ["caused", "causing", "cause"], "cures": ["cured", "curing", "cure"],
    "kids": ["kid", "children"], "cards": ["card"], "users": ["user"],
    "hiding": ["hides", "hid"], "reduces": ["reduced", "reducing"],
    "shows": ["showed", "showing"], "arresting": ["arrested", "arrests"],
    "banning": ["bans", "banned"], "prevents": ["prevented", "prevention"],
    "spread": ["spreading", "spreads"], "wants": ["wanted", "want"],
    "staged": ["stage", "staging"], "absorb": ["absorbs", "absorbing"],
    "vaccines": ["vaccine", "vaccination"], "levels": ["level"],
    "companies": ["company"], "infection": ["infections", "infected"],
}
FILLER = ["the", "a", "of", "new", "claim", "says", "that", "really", "and", "post"]

def perturb(rng, tokens):
    out = list(tokens)
    for _ in range(rng.randint(1, 4)):
        op = rng.random()
        if op < 0.3 and out:
            i = rng.randrange(len(out))
            if out[i] in SWAPS:
                out[i] = rng.choice(SWAPS[out[i]])
            else:
                out[i] = rng.choice(FILLER)
        elif op < 0.5 and len(out) > 2:
            del out[rng.randrange(len(out))]
        elif op < 0.7:
            out.insert(rng.randrange(len(out) + 1), rng.choice(FILLER))
        elif op < 0.85 and len(out) > 3:
            i = rng.randrange(len(out) - 1)
            out[i], out[i + 1] = out[i + 1], out[i]
        else:
            out.append(rng.choice(out) if out else "the")
    return out

rng = random.Random(20231206)
pairs = []
for i in range(44):
    ref = BASE[i % len(BASE)].split()
    hyp = perturb(rng, ref)
    pairs.append({"hyp": hyp, "ref": ref})
# edge cases
pairs.append({"hyp": "the the the the the the the".split(), "ref": "the cat is on the mat".split()})
pairs.append({"hyp": ["honey"], "ref": "honey cures covid-19".split()})
pairs.append({"hyp": "vaccines alter dna".split(), "ref": "5g towers spread the virus".split()})
pairs.append({"hyp": "root canal cause cancer".split(), "ref": "root canal treatment causes cancer".split()})
pairs.append({"hyp": "cancer causes canal root".split(), "ref": "root canal causes cancer".split()})
pairs.append({"hyp": "a b c d".split(), "ref": "a b c e".split()})
assert len(pairs) == 50
json.dump({"pairs": pairs}, open("tests/fixtures/metric_pairs.json", "w"), indent=1)
