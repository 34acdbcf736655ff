#!/usr/bin/env python3
"""Regenerates the offline fixtures of this directory.

    cavg verbalize --corpus ontologies --style summary --out /tmp/summary.jsonl
    cavg verbalize --corpus ontologies --style verbose --out /tmp/verbose.jsonl
    python3 generate_fixtures.py /tmp/summary.jsonl /tmp/verbose.jsonl

Writes translations/{fr,zh}.jsonl and activations/<style>/<lang>.jsonl.
Translations are word-for-word dictionary renderings; activations are
synthetic: classes linked by a reference mapping share a set of semantic
concepts, and every language adds concepts from its own pool. The edas-Author
records at layer 12 (verbose, en and zh) are taken from
../edas_author_layer12.jsonl.
"""

import json
import math
import random
import re
import sys
from pathlib import Path

HERE = Path(__file__).resolve().parent
LAYERS = range(26)
LANGS = ["en", "fr", "zh"]
WIDTH = 16384
MODEL = "gemma-2-2b"
SAE = "gemma-scope-2b-pt-res-canonical"
SEED = 20241015

FR = {
    "is a SubClassOf": "est une sous-classe de",
    "is a SuperClassOf": "est une super-classe de",
    "and": "et", "some": "certains", "only": "uniquement",
    "Author": "Auteur", "Person": "Personne", "Paper": "Article", "Review": "Revue",
    "Reviewer": "Relecteur", "Document": "Document", "Contribution": "Contribution",
    "Presenter": "Présentateur", "Conference": "Conférence", "Committee": "Comité",
    "Chair": "Président", "Abstract": "Résumé", "ConferenceChair": "Président de conférence",
    "PaperAbstract": "Résumé d'article", "writePaper": "écrit un article",
    "writeReview": "écrit une revue", "hasAbstract": "a un résumé", "has_an_abstract": "a un résumé",
    "invited_by": "invité par", "writes": "écrit", "hasRelatedPaper": "a un article lié",
    "Speaker": "Orateur", "Fee": "Frais",
}
ZH = {
    "is a SubClassOf": "是一个子类", "is a SuperClassOf": "是一个超类",
    "and": "并且", "some": "一些", "only": "仅",
    "Author": "作者", "Person": "人", "Paper": "论文", "Review": "评审", "Reviewer": "审稿人",
    "Document": "文档", "Contribution": "贡献", "Presenter": "演讲者", "Conference": "会议",
    "Committee": "委员会", "Chair": "主席", "Abstract": "摘要", "ConferenceChair": "会议主席",
    "PaperAbstract": "论文摘要", "writePaper": "撰写论文", "writeReview": "撰写评审",
    "hasAbstract": "有摘要", "has_an_abstract": "有摘要", "invited_by": "被邀请",
    "writes": "写", "hasRelatedPaper": "有相关论文", "Speaker": "演讲人", "Fee": "费用",
}
# Published renderings of edas-Author.
FIXED = {
    ("edas-Author", "summary", "fr"): "Personne auteur uniquement Contribution Certaines écritures Contribution Contribution",
    ("edas-Author", "verbose", "fr"): "L'auteur est une sous-classe de contribution des écritures et est une personne sous-classe et est une sous-classe unique en rédaction de contribution et écrit la contribution",
    ("edas-Author", "summary", "zh"): "作者有些人写贡献只写贡献",
    ("edas-Author", "verbose", "zh"): "作者是一个子类人，是一个仅写作贡献的子阶级，并且是某些撰写贡献的子类别，并写下了贡献",
}


def translate(text, table, sep):
    phrases = sorted(table, key=len, reverse=True)
    pattern = re.compile("|".join(re.escape(p) for p in phrases))
    words = []
    pos = 0
    for m in pattern.finditer(text):
        # whole words only
        if (m.start() > 0 and text[m.start() - 1] != " ") or (m.end() < len(text) and text[m.end()] != " "):
            continue
        if text[pos:m.start()].strip():
            words.append(text[pos:m.start()].strip())
        words.append(table[m.group(0)])
        pos = m.end()
    if text[pos:].strip():
        words.append(text[pos:].strip())
    return sep.join(words)


def read_jsonl(path):
    return [json.loads(line) for line in Path(path).read_text(encoding="utf-8").splitlines() if line.strip()]


def write_jsonl(path, records):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        for r in records:
            f.write(json.dumps(r, ensure_ascii=False, separators=(",", ":")) + "\n")


def mapping_groups(keys):
    """Union-find over the reference mappings."""
    parent = {k: k for k in keys}
    names = {k.split("-", 1)[0].lower(): k.split("-", 1)[0] for k in keys}

    def find(k):
        while parent[k] != k:
            parent[k] = parent[parent[k]]
            k = parent[k]
        return k

    for rdf in sorted((HERE / "references").glob("*.rdf")):
        a, b = rdf.stem.split("-")
        a, b = names[a.lower()], names[b.lower()]
        doc = rdf.read_text(encoding="utf-8")
        for e1, e2 in re.findall(r"entity1 rdf:resource='[^#]+#([^']+)'/>\s*<entity2 rdf:resource='[^#]+#([^']+)'", doc):
            ka, kb = f"{a}-{e1}", f"{b}-{e2}"
            if ka in parent and kb in parent:
                parent[find(ka)] = find(kb)
    return {k: find(k) for k in keys}


def main(summary_path, verbose_path):
    english = {}
    for path in (summary_path, verbose_path):
        for r in read_jsonl(path):
            english[(r["class_key"], r["style"])] = r["text"]
    keys = sorted({k for k, _ in english})
    styles = sorted({s for _, s in english})

    for lang, table, sep in (("fr", FR, " "), ("zh", ZH, "")):
        records = []
        for style in styles:
            for k in keys:
                text = FIXED.get((k, style, lang)) or translate(english[(k, style)], table, sep)
                records.append({"class_key": k, "style": style, "language": lang, "text": text})
        write_jsonl(HERE / "translations" / f"{lang}.jsonl", records)

    rng = random.Random(SEED)
    group = mapping_groups(keys)
    published = {(r["class_key"], r["style"], r["language"], r["layer"]): r
                 for r in read_jsonl(HERE.parent / "edas_author_layer12.jsonl")}

    # Language pools: every class of a language draws from the same ids.
    pools = {}
    for style in styles:
        for lang in LANGS:
            for layer in LAYERS:
                pools[(style, lang, layer)] = rng.sample(range(8000, WIDTH), 30)

    out = {(s, lang): [] for s in styles for lang in LANGS}
    for style in styles:
        noise_dim = 12 if style == "verbose" else 8
        for layer in LAYERS:
            # Relative strength of the language-specific concepts varies by depth.
            noise = 0.6 + 0.9 * (1 + math.sin(layer / 4.0)) / 2
            cores = {}
            for g in sorted(set(group.values())):
                cores[g] = [(cid, rng.uniform(10, 60)) for cid in rng.sample(range(0, 8000), 6)]
            for k in keys:
                for lang in LANGS:
                    cell = (k, style, lang, layer)
                    if cell in published:
                        out[(style, lang)].append(published[cell])
                        continue
                    entries = []
                    for cid, w in cores[group[k]]:
                        if rng.random() < 0.2:
                            continue
                        entries.append([cid, w * rng.uniform(0.7, 1.3)])
                        if rng.random() < 0.25:
                            entries.append([cid, w * rng.uniform(0.4, 0.9)])
                    for cid in rng.sample(pools[(style, lang, layer)], noise_dim):
                        entries.append([cid, noise * rng.uniform(20, 70)])
                    entries.append([rng.randrange(WIDTH), rng.uniform(5, 20)])
                    rng.shuffle(entries)
                    out[(style, lang)].append({
                        "class_key": k, "style": style, "language": lang, "layer": layer,
                        "sae_width": WIDTH, "model": MODEL, "sae": SAE,
                        "entries": [[cid, round(w, 4)] for cid, w in entries],
                    })
    for (style, lang), records in out.items():
        records.sort(key=lambda r: (r["class_key"], r["layer"]))
        write_jsonl(HERE / "activations" / style / f"{lang}.jsonl", records)


if __name__ == "__main__":
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    main(sys.argv[1], sys.argv[2])
