"""Builds the scaled ClaimReview feed (100 objects, 50 with itemReviewed)
and the counts each construction step is expected to produce."""
import json
import random

rng = random.Random(44478)

SUBJECTS = ["The new vaccine", "Drinking lemon water", "The city council", "A viral video",
            "The prime minister", "Eating garlic", "5G towers", "The central bank",
            "Hand sanitizer", "A local hospital"]
VERBS = ["causes", "prevents", "banned", "approved", "cures", "spreads", "shows", "sold"]
OBJECTS = ["cancer in children", "the coronavirus", "all private cars", "a new tax on bread",
           "memory loss", "farmland to foreign companies", "free internet for everyone",
           "a nationwide curfew"]


def english_post(i):
    s, v, o = rng.choice(SUBJECTS), rng.choice(VERBS), rng.choice(OBJECTS)
    return (f"BREAKING #{i}: {s} {v} {o}!! They do not want you to know this. "
            f"Share it with the people you love before it is taken down https://t.co/x{i}")


def claim(i):
    return f"{rng.choice(SUBJECTS)} {rng.choice(VERBS)} {rng.choice(OBJECTS)} (case {i})."


def review(i, with_item, kind):
    obj = {"@type": "ClaimReview", "url": f"https://factcheck.example/{i}",
           "datePublished": "2022-01-01"}
    title = claim(i)
    if kind == "identical":
        obj["headline"] = title
        obj["claimReviewed"] = "  " + title.upper().rstrip(".") + "  "
    else:
        obj["headline"] = title
        obj["claimReviewed"] = claim(i + 1000)
    if with_item:
        appearance = {"@type": "CreativeWork", "url": f"https://social.example/p/{i}",
                      "text": english_post(i)}
        if kind == "image":
            appearance["@type"] = "ImageObject"
        if kind == "video":
            appearance["@type"] = "VideoObject"
        if kind == "no_text":
            del appearance["text"]
        if kind == "spanish":
            obj["inLanguage"] = {"@type": "Language", "name": "Spanish", "alternateName": "es"}
        obj["itemReviewed"] = {"@type": "Claim", "appearance": [appearance]}
    return obj


kinds = (["plain"] * 27 + ["identical"] * 8 + ["image"] * 4 + ["video"] * 2 +
         ["spanish"] * 4 + ["no_text"] * 3 + ["duplicate"] * 2)
assert len(kinds) == 50
objects = []
for i, kind in enumerate(kinds):
    objects.append(review(i, True, kind))
# Duplicates copy an earlier accepted object under a different fact-check URL.
for j, obj in enumerate(objects):
    if kinds[j] == "duplicate":
        src = dict(objects[j - 40])
        src["url"] = obj["url"]
        objects[j] = src
for i in range(50, 100):
    objects.append(review(i, False, "plain"))
rng.shuffle(objects)

half = len(objects) // 2
feed = {"@context": "https://schema.org", "@type": "DataFeed",
        "dataFeedElement": [{"@type": "DataFeedItem", "item": o} for o in objects[:half]],
        "@graph": objects[half:]}

expected = {
    "input": 100,
    "parsed": 50,
    "missing_reviewed_items": 50,
    "non_text_modality": 6,
    "non_english": 4,
    "post_unavailable": 3,
    "duplicate_title_review": 2,
    "missing_required_field": 0,
    "accepted": 35,
    "merged_identical_references": 8,
    "two_reference_records": 27,
}

with open("tests/fixtures/claimreview_feed.json", "w") as f:
    json.dump(feed, f, indent=1, ensure_ascii=False)
with open("tests/fixtures/claimreview_feed_expected.json", "w") as f:
    json.dump(expected, f, indent=1)
