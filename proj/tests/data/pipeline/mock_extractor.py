#!/usr/bin/env python3
"""Stand-in extractor for tests: answers requests from the fixture files.

Command mode: reads the request JSONL on stdin, route and parameters from
CAVG_ROUTE / CAVG_LAYERS / CAVG_LANGUAGE, writes the response on stdout.
"""

import json
import os
import sys
from pathlib import Path

sys.stdin.reconfigure(encoding="utf-8")
sys.stdout.reconfigure(encoding="utf-8")

root = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent
route = os.environ.get("CAVG_ROUTE", "/extract")
prompts = [json.loads(line) for line in sys.stdin.read().splitlines() if line.strip()]

if route == "/translate":
    lang = os.environ["CAVG_LANGUAGE"]
    table = {}
    for line in (root / "translations" / f"{lang}.jsonl").read_text(encoding="utf-8").splitlines():
        r = json.loads(line)
        table[(r["class_key"], r["style"])] = line
    for p in prompts:
        print(table[(p["class_key"], p["style"])])
elif route == "/extract":
    layers = {int(x) for x in os.environ["CAVG_LAYERS"].split(",")}
    wanted = {(p["class_key"], p["style"], p["language"]) for p in prompts}
    for f in sorted((root / "activations").rglob("*.jsonl")):
        for line in f.read_text(encoding="utf-8").splitlines():
            r = json.loads(line)
            if (r["class_key"], r["style"], r["language"]) in wanted and r["layer"] in layers:
                print(line)
else:
    sys.exit(f"unknown route {route}")
