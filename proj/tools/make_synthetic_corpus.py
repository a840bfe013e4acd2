#!/usr/bin/env python3
"""Generate a seeded Wikidata-style corpus of entities, facts and short descriptions.

Descriptions mix words copied from fact values ("street in Elsloo") with
words that only the vocabulary can supply (nationality adjectives, "in",
"by", "species of"), in the proportions typical of Wikidata descriptions.

    python3 tools/make_synthetic_corpus.py --out data
"""

import argparse
import json
import os
import random

ONSETS = ["b", "br", "d", "dr", "f", "g", "gr", "h", "j", "k", "kl", "l", "m", "n", "p", "pr",
          "r", "s", "st", "t", "tr", "v", "w", "z", "sh", "ch", "th", "el", "an", "or"]
VOWELS = ["a", "e", "i", "o", "u", "ae", "ei", "oo", "ia", "au"]
CODAS = ["", "", "n", "r", "s", "l", "m", "k", "t", "nd", "rg", "st", "x", "ll"]

COUNTRIES = [
    ("Netherlands", "Dutch"), ("France", "French"), ("Germany", "German"), ("Italy", "Italian"),
    ("Spain", "Spanish"), ("Japan", "Japanese"), ("Sweden", "Swedish"), ("Poland", "Polish"),
    ("Brazil", "Brazilian"), ("Canada", "Canadian"), ("Norway", "Norwegian"), ("Austria", "Austrian"),
    ("Belgium", "Belgian"), ("Mexico", "Mexican"), ("India", "Indian"), ("Australia", "Australian"),
    ("United States of America", "American"), ("United Kingdom", "British"), ("Portugal", "Portuguese"),
    ("Hungary", "Hungarian"), ("Finland", "Finnish"), ("Greece", "Greek"), ("Denmark", "Danish"),
    ("Argentina", "Argentine"), ("Czech Republic", "Czech"), ("Ireland", "Irish"),
]
OCCUPATIONS = ["painter", "politician", "writer", "footballer", "actor", "actress", "composer",
               "journalist", "architect", "physician", "poet", "historian", "sculptor", "singer",
               "botanist", "engineer", "lawyer", "mathematician", "photographer", "chemist",
               "swimmer", "cyclist", "diplomat", "priest", "economist", "philosopher"]
SPORTS_OCC = {"footballer": "association football", "swimmer": "swimming", "cyclist": "road bicycle racing"}
GENRES_FILM = ["drama film", "comedy film", "documentary film", "horror film", "crime film", "western film"]
GENRES_MUSIC = ["rock music", "jazz", "pop music", "heavy metal", "folk music", "hip hop music"]
PAINT_GENRES = ["portrait", "landscape art", "still life", "religious art", "marine art"]
JOURNALS = ["Journal of {} Research", "{} Letters", "Annals of {}", "Reviews in {}", "{} Quarterly"]
FIELDS = ["Physics", "Chemistry", "Biology", "Medicine", "Genetics", "Ecology", "Geology",
          "Neuroscience", "Astronomy", "Oncology", "Immunology", "Botany"]
TAXON_GROUPS = [
    # (higher taxon value, description group word)
    ("Coleoptera", "beetle"), ("Lepidoptera", "insect"), ("Diptera", "insect"),
    ("Asteraceae", "plant"), ("Orchidaceae", "plant"), ("Poaceae", "plant"),
    ("Araneae", "arachnid"), ("Gastropoda", "mollusc"), ("Actinopterygii", "fish"),
    ("Aves", "bird"), ("Agaricales", "fungus"), ("Formicidae", "insect"),
]
MUSEUMS = ["Rijksmuseum", "Louvre", "National Gallery", "Prado Museum", "Hermitage Museum",
           "Uffizi Gallery", "Mauritshuis", "Metropolitan Museum of Art", "Kunsthalle Bremen"]
ENCYCLOPEDIAS = ["Brockhaus and Efron Encyclopedic Dictionary", "Encyclopaedia Britannica Eleventh Edition",
                 "Nordisk familjebok", "Real Encyclopedia of Classical Antiquity", "Dictionary of National Biography"]
WATER = ["Seto Inland Sea", "Sea of Japan", "Pacific Ocean", "East China Sea", "Philippine Sea"]


class Names:
    def __init__(self, rng):
        self.rng = rng

    def word(self, syllables=None):
        n = syllables or self.rng.choice([2, 2, 2, 3, 3, 1])
        parts = [self.rng.choice(ONSETS) + self.rng.choice(VOWELS) + self.rng.choice(CODAS) for _ in range(n)]
        return "".join(parts).capitalize()

    def person(self):
        given = self.word(2)
        if self.rng.random() < 0.2:
            return f"{given} {self.rng.choice(['van', 'de', 'von', 'da'])} {self.word()}"
        return f"{given} {self.word()}"


def year(rng, lo=1600, hi=2018):
    return str(rng.randint(lo, hi))


def distractors(rng, names, k):
    pool = [
        ("Commons category", names.word() + " " + names.word()),
        ("image", names.word() + ".jpg"),
        ("coordinate location", f"{rng.uniform(-80, 80):.4f}, {rng.uniform(-170, 170):.4f}"),
        ("described at URL", "http://example.org/" + names.word().lower()),
        ("Freebase ID", "/m/0" + "".join(rng.choice("abcdefghjkmnpqrstvwxyz0123456789") for _ in range(5))),
        ("VIAF ID", str(rng.randint(10_000_000, 99_999_999))),
        ("GeoNames ID", str(rng.randint(100_000, 9_999_999))),
        ("official website", "http://www." + names.word().lower() + ".org"),
    ]
    rng.shuffle(pool)
    return pool[:k]


def human(rng, names):
    country, adj = rng.choice(COUNTRIES)
    occ = rng.sample(OCCUPATIONS, 2)
    sex = "female" if occ[0] == "actress" or rng.random() < 0.35 else "male"
    facts = [("instance of", "human"), ("sex or gender", sex), ("country of citizenship", country),
             ("occupation", occ[0]), ("date of birth", year(rng, 1550, 1995)),
             ("place of birth", names.word()), ("given name", names.word(2))]
    two = rng.random() < 0.25
    if two:
        facts.append(("occupation", occ[1]))
    if occ[0] in SPORTS_OCC:
        facts.append(("sport", SPORTS_OCC[occ[0]]))
    r = rng.random()
    if two:
        desc = f"{adj} {occ[0]} and {occ[1]}"
    elif r < 0.65:
        desc = f"{adj} {occ[0]}"
    elif r < 0.85:
        b = int(facts[4][1])
        desc = f"{adj} {occ[0]} ({b}-{b + rng.randint(30, 90)})"
    else:
        desc = f"{occ[0]} from {country}"
    return facts, desc


def painting(rng, names):
    painter = names.person()
    facts = [("instance of", "painting"), ("creator", painter), ("collection", rng.choice(MUSEUMS)),
             ("inception", year(rng, 1450, 1900)), ("genre", rng.choice(PAINT_GENRES)),
             ("made from material", rng.choice(["oil paint", "tempera", "watercolor paint"]))]
    desc = f"painting by {painter}" if rng.random() < 0.85 else f"{facts[4][1]} by {painter}"
    return facts, desc


def commune(rng, names):
    dept = names.word()
    facts = [("instance of", "commune of France"), ("country", "France"),
             ("located in the administrative territorial entity", dept),
             ("population", str(rng.randint(40, 25_000))), ("postal code", str(rng.randint(10_000, 95_999)))]
    desc = f"commune in {dept}, France"
    return facts, desc


def film(rng, names):
    director = names.person()
    country, adj = rng.choice(COUNTRIES)
    y = year(rng, 1910, 2018)
    facts = [("instance of", "film"), ("director", director), ("publication date", y),
             ("country of origin", country), ("genre", rng.choice(GENRES_FILM)),
             ("original language of film or TV show", adj + " language" if rng.random() < 0.5 else "English"),
             ("cast member", names.person())]
    r = rng.random()
    if r < 0.45:
        desc = f"{y} film by {director}"
    elif r < 0.8:
        desc = f"{y} {adj} film"
    else:
        desc = f"{y} film directed by {director}"
    return facts, desc


def article(rng, names):
    y = year(rng, 1950, 2018)
    journal = rng.choice(JOURNALS).format(rng.choice(FIELDS))
    facts = [("instance of", "scholarly article"), ("publication date", y), ("published in", journal),
             ("main subject", names.word().lower() + " " + rng.choice(["protein", "gene", "syndrome", "receptor"])),
             ("title", " ".join(names.word().lower() for _ in range(rng.randint(3, 7)))),
             ("author name string", names.person())]
    desc = f"scientific article published in {y}" if rng.random() < 0.7 else "scientific article"
    return facts, desc


def asteroid(rng, names):
    facts = [("instance of", "asteroid"), ("parent astronomical body", "Sun"),
             ("discoverer or inventor", names.person()), ("time of discovery", year(rng, 1850, 2010)),
             ("site of discovery", names.word() + " Observatory"), ("minor planet group", "asteroid belt")]
    desc = "asteroid" if rng.random() < 0.6 else "main-belt asteroid"
    return facts, desc


def taxon(rng, names):
    higher, group = rng.choice(TAXON_GROUPS)
    genus = names.word()
    facts = [("instance of", "taxon"), ("taxon rank", "species"), ("parent taxon", genus),
             ("taxon name", f"{genus} {names.word().lower()}"), ("higher taxon", higher),
             ("IUCN conservation status", rng.choice(["Least Concern", "Vulnerable", "Data Deficient"]))]
    desc = f"species of {group}"
    return facts, desc


def album(rng, names):
    band = names.word() if rng.random() < 0.5 else "The " + names.word() + "s"
    y = year(rng, 1960, 2018)
    facts = [("instance of", "album"), ("performer", band), ("publication date", y),
             ("genre", rng.choice(GENRES_MUSIC)), ("record label", names.word() + " Records"),
             ("producer", names.person())]
    r = rng.random()
    if r < 0.5:
        desc = f"album by {band}"
    elif r < 0.8:
        desc = f"{y} studio album by {band}"
    else:
        desc = f"{y} album by {band}"
    return facts, desc


def street(rng, names):
    town = names.word()
    country, _ = rng.choice(COUNTRIES[:8])
    facts = [("instance of", "street"), ("location", town), ("country", country),
             ("named after", names.person())]
    desc = f"street in {town}" if rng.random() < 0.8 else f"street in {town}, {country}"
    return facts, desc


def island(rng, names):
    region = names.word()
    if rng.random() < 0.7:
        country, area = "Japan", f"{region} Prefecture"
    else:
        country, area = "Philippines", f"Province of {region}"
    facts = [("instance of", "island"), ("located in the administrative territorial entity", area),
             ("country", country), ("located in or next to body of water", rng.choice(WATER)),
             ("area", f"{rng.uniform(0.1, 90):.2f} square kilometre")]
    desc = f"island in {region}, {country}"
    return facts, desc


def encyclopedic(rng, names):
    work = rng.choice(ENCYCLOPEDIAS)
    facts = [("instance of", "encyclopedic article"), ("published in", work),
             ("main subject", names.word()), ("title", names.word()),
             ("volume", str(rng.randint(1, 40)))]
    desc = f"article in {work}" if rng.random() < 0.7 else "encyclopedic article"
    return facts, desc


TYPES = [(human, 30), (article, 14), (taxon, 12), (painting, 7), (commune, 7), (film, 7),
         (asteroid, 5), (album, 6), (street, 4), (island, 4), (encyclopedic, 4)]

FIGURE_ENTITY = {
    "id": "Q19345316",
    "facts": [
        {"property": "instance of", "value": "street"},
        {"property": "location", "value": "Elsloo"},
        {"property": "country", "value": "Netherlands"},
        {"property": "named after", "value": "Michiel de Ruyter"},
    ],
    "description": "street in Elsloo",
}


def make_entities(rng, count, first_id):
    names = Names(rng)
    makers = [m for m, _ in TYPES]
    weights = [w for _, w in TYPES]
    out = []
    for i in range(count):
        maker = rng.choices(makers, weights)[0]
        facts, desc = maker(rng, names)
        while len(facts) < 5:
            facts.extend(distractors(rng, names, 5 - len(facts)))
        facts = facts + distractors(rng, names, rng.randint(0, 3))
        # Keep "instance of" first as in Wikidata dumps, shuffle the rest.
        head, tail = facts[:1], facts[1:]
        rng.shuffle(tail)
        out.append({
            "id": f"Q{first_id + i}",
            "facts": [{"property": p, "value": v} for p, v in head + tail],
            "description": desc,
        })
    return out


def write(path, entities):
    with open(path, "w", encoding="utf-8") as f:
        for e in entities:
            f.write(json.dumps(e, ensure_ascii=False) + "\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="data")
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--entities", type=int, default=1000)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    split_dir = os.path.join(args.out, "wikifacts_synth")
    os.makedirs(split_dir, exist_ok=True)
    entities = make_entities(rng, args.entities, 1_000_000)
    n_train = int(0.8 * len(entities))
    n_dev = int(0.1 * len(entities))
    write(os.path.join(split_dir, "train.jsonl"), entities[:n_train])
    write(os.path.join(split_dir, "dev.jsonl"), entities[n_train:n_train + n_dev])
    write(os.path.join(split_dir, "test.jsonl"), entities[n_train + n_dev:])

    overfit = [FIGURE_ENTITY] + make_entities(random.Random(args.seed + 1), 49, 2_000_000)
    write(os.path.join(args.out, "overfit50.jsonl"), overfit)
    print(f"seed {args.seed}: {n_train}/{n_dev}/{len(entities) - n_train - n_dev} entities in {split_dir}, "
          f"{len(overfit)} in overfit50.jsonl")


if __name__ == "__main__":
    main()
