#!/usr/bin/env python3
"""Regenerates posts.jsonl and annotations.jsonl for the shipped fixture corpus.

Synthetic German posts over eight days on four recurring themes, with
mentions, hashtags, gazetteer names, numeric claims and a few records that
ingest must reject or filter out. Output is fully determined by SEED.
"""

import json
import random
from pathlib import Path

SEED = 20240108
HERE = Path(__file__).resolve().parent

THEMES = {
    "heizung": {
        "words": ["heizungsgesetz", "wärmepumpe", "heizung", "gasheizung", "strompreis", "sanierung",
                  "gebäudeenergie", "förderprogramm", "fernwärme", "energiewende", "ölheizung", "heizkosten"],
        "tags": ["Heizungsgesetz", "Wärmepumpe", "Energiewende"],
        "names": ["Habeck", "Robert Habeck", "Bundesregierung"],
        "handles": ["RobertHabeck"],
        "claims": ["Eine Wärmepumpe kostet im Schnitt {n} Tausend Euro.",
                   "Der Strompreis ist seit Januar um {n} Prozent gestiegen.",
                   "Nur {n} Prozent der Haushalte heizen mit Fernwärme."],
    },
    "migration": {
        "words": ["migration", "asyl", "grenze", "abschiebung", "flüchtlinge", "grenzkontrollen",
                  "asylverfahren", "integration", "zuwanderung", "schleuser", "aufnahme", "kommunen"],
        "tags": ["Migration", "Asyl", "Grenzkontrollen"],
        "names": ["Faeser", "Nancy Faeser", "BAMF"],
        "handles": ["NancyFaeser"],
        "claims": ["Im letzten Jahr wurden {n} Tausend Asylanträge gestellt.",
                   "An der Grenze wurden {n} Schleuser festgenommen.",
                   "Die Kommunen haben {n} Prozent mehr Geflüchtete aufgenommen."],
    },
    "bauern": {
        "words": ["bauern", "landwirtschaft", "agrardiesel", "subventionen", "traktoren", "blockaden",
                  "bauernproteste", "landwirte", "höfe", "sternfahrt", "ernte", "ackerland"],
        "tags": ["Bauernproteste", "Agrardiesel", "Landwirtschaft"],
        "names": ["Bauernverband", "Lindner", "Christian Lindner"],
        "handles": ["ChristianLindner"],
        "claims": ["Die Kürzung beim Agrardiesel kostet jeden Hof {n} Tausend Euro.",
                   "Mehr als {n} Tausend Traktoren fuhren nach Berlin.",
                   "Die Subventionen machen {n} Prozent des Einkommens der Landwirte aus."],
    },
    "rente": {
        "words": ["rente", "inflation", "preise", "rentner", "lebensmittel", "mieten", "kaufkraft",
                  "lohn", "altersarmut", "rentenniveau", "supermarkt", "teuerung"],
        "tags": ["Rente", "Inflation", "Preise"],
        "names": ["Scholz", "Olaf Scholz", "Bundestag"],
        "handles": ["OlafScholz"],
        "claims": ["Die Inflation lag im Dezember bei {n} Prozent.",
                   "Das Rentenniveau sinkt bis 2030 auf {n} Prozent.",
                   "Lebensmittel sind um {n} Prozent teurer geworden."],
    },
}

ACCOUNTS = [
    ("telegram", "freiheitskanal", "afd"),
    ("telegram", "wahrheitjetzt", None),
    ("telegram", "buergerstimme", None),
    ("x", "spd_fraktion", "spd"),
    ("x", "cdu_news", "cdu"),
    ("x", "gruene_bund", "grüne"),
    ("x", "fdp_aktuell", "fdp"),
    ("facebook", "heimatforum", None),
    ("facebook", "landvolk_nord", None),
    ("news", "", None),
]

NEWS_SITES = ["https://www.tagesschau.de/inland/", "https://www.spiegel.de/politik/", "https://www.bbc.co.uk/news/"]

POSITIVE = ["gut", "endlich", "hoffnung", "gemeinsam", "richtig", "danke", "fair", "stark"]
NEGATIVE = ["chaos", "skandal", "versagen", "katastrophe", "teuer", "wut", "dreist", "gescheitert"]
HATEFUL = ["abschaum", "pack", "volksverräter", "gesindel", "parasiten"]
FILLER = ["heute", "wieder", "alle", "diese", "woche", "regierung", "ampel", "politik"]


def url_for(rng, platform, author, n):
    if platform == "telegram":
        return f"https://t.me/{author}/{n}"
    if platform == "x":
        return f"https://x.com/{author}/status/{n}"
    if platform == "facebook":
        return f"https://www.facebook.com/{author}/posts/{n}"
    return rng.choice(NEWS_SITES) + f"artikel-{n}.html"


def make_post(rng, idx, day, theme_name):
    theme = THEMES[theme_name]
    platform, author, party = rng.choice(ACCOUNTS)
    words = rng.sample(theme["words"], rng.randint(5, 7))
    words[0] = words[0].capitalize()
    parts = [" ".join(words) + "."]
    mood = rng.random()
    if mood < 0.35:
        parts.append(f"{rng.choice(POSITIVE).capitalize()} {rng.choice(POSITIVE)} {rng.choice(FILLER)}.")
    elif mood < 0.75:
        parts.append(f"{rng.choice(NEGATIVE).capitalize()} {rng.choice(NEGATIVE)} {rng.choice(FILLER)}.")
    if rng.random() < 0.08:
        parts.append(f"Dieses {rng.choice(HATEFUL)} {rng.choice(HATEFUL)}!")
    if rng.random() < 0.35:
        parts.append(rng.choice(theme["claims"]).format(n=rng.randint(2, 95)))
    if rng.random() < 0.5:
        parts.append(f"{rng.choice(theme['names'])} muss handeln.")
    if rng.random() < 0.4:
        parts.append("@" + rng.choice(theme["handles"]))
    if rng.random() < 0.2:
        other = rng.choice([t for t in THEMES if t != theme_name])
        parts.append("@" + THEMES[other]["handles"][0])
    if rng.random() < 0.6:
        parts.append("#" + rng.choice(theme["tags"]))
    hour, minute = rng.randint(6, 22), rng.randint(0, 59)
    return {
        "id": f"p{idx:04d}",
        "platform": platform,
        "author": author,
        "author_party": party,
        "url": url_for(rng, platform, author, 1000 + idx),
        "published_at": f"{day}T{hour:02d}:{minute:02d}:00Z",
        "text": " ".join(parts),
        "language": "de",
    }


def main():
    rng = random.Random(SEED)
    days = [f"2024-01-{d:02d}" for d in range(8, 16)]
    lines = []
    posts = []
    idx = 1
    for day in days:
        for theme_name in THEMES:
            for _ in range(rng.randint(4, 6)):
                p = make_post(rng, idx, day, theme_name)
                posts.append(p)
                lines.append(json.dumps(p, ensure_ascii=False))
                idx += 1

    # Off-topic posts the keyword filter drops.
    for text in ["Schönes Wetter heute am See.", "Das Fußballspiel gestern war spannend.",
                 "Neues Rezept für Apfelkuchen ausprobiert.", "Konzert am Samstag, wer kommt mit?"]:
        lines.append(json.dumps({"id": f"p{idx:04d}", "platform": "x", "author": "alltag_blog",
                                 "author_party": None, "url": f"https://x.com/alltag_blog/status/{idx}",
                                 "published_at": "2024-01-10T12:00:00Z", "text": text, "language": "de"},
                                ensure_ascii=False))
        idx += 1
    # A repeated id (first occurrence wins) and records ingest rejects.
    lines.append(json.dumps(dict(posts[3], text="Doppelt: Heizung und Energie."), ensure_ascii=False))
    lines.append('{"id": "bad1", "platform": "x", "author": "a", "url": "", '
                 '"published_at": "gestern", "text": "Migration", "language": "de"}')
    lines.append('{"id": "bad2", "platform": "x", "author": "a", "url": "", '
                 '"published_at": "2024-01-09T10:00:00Z", "language": "de"}')
    lines.append('{"id": "bad3", "platform": ')
    (HERE / "posts.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")

    # Four primary raters plus a tie-breaker for 40 posts. Raters mostly agree
    # with a cue-word reading of the text and disagree at random otherwise.
    annotations = []
    sentiment_labels = ["negative", "neutral", "positive"]
    for p in rng.sample(posts, 40):
        words = set(p["text"].lower().replace(".", " ").replace("!", " ").split())
        pos = len(words & set(POSITIVE))
        neg = len(words & set(NEGATIVE))
        base = "positive" if pos > neg else "negative" if neg > pos else "neutral"
        hate = "hate" if words & set(HATEFUL) else "normal"
        for task, truth, labels in (("sentiment", base, sentiment_labels), ("hate", hate, ["hate", "normal"])):
            votes = [truth if rng.random() < 0.75 else rng.choice(labels) for _ in range(4)]
            counts = {l: votes.count(l) for l in labels}
            top = max(counts.values())
            tied = sorted(l for l in labels if counts[l] == top)
            tie_breaker = (truth if truth in tied else tied[0]) if len(tied) > 1 else None
            annotations.append({"post_id": p["id"], "task": task, "votes": votes, "tie_breaker": tie_breaker})
    (HERE / "annotations.jsonl").write_text(
        "\n".join(json.dumps(a, ensure_ascii=False) for a in annotations) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
