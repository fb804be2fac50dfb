#!/usr/bin/env python3
"""Generate the synthetic temporal-evaluation corpus.

Writes data/eval/seed_kb.json and data/eval/reports/rNN.json (annotation
format). Reports are ordered; each introduces two new entities through
naming patterns, and every report after the first batch mentions two
entities introduced in earlier batches by bare name only.
"""
import json
import os
import random

BATCH = 5
N_REPORTS = 20

GROUPS = ["APT29", "APT28", "FIN7", "Turla", "Kimsuky", "Sandworm"]
TOOLS = ["7-Zip", "Mimikatz", "PsExec", "AdFind", "Rclone", "Cobalt Strike"]
MALWARE = ["Emotet", "TrickBot", "QakBot", "Dridex"]
COUNTRIES = ["Germany", "France", "Japan", "Canada", "Brazil", "Poland", "Italy", "Spain"]

FILLER = ["The investigation is ongoing.", "Indicators are listed in the appendix.",
          "Several sectors were affected.", "Detection rules were updated."]

SYL = ["vor", "tal", "quin", "zer", "mol", "brak", "syl", "tem", "dra", "kor", "lix", "nub", "fen", "gal", "rho", "vex"]


class Doc:
    def __init__(self):
        self.text = ""
        self.entities = []
        self.relations = []

    def add(self, *parts):
        """parts: plain strings or (surface, type) tuples; returns entity indices."""
        idx = []
        if self.text:
            self.text += " "
        for p in parts:
            if isinstance(p, tuple):
                s, t = p
                start = len(self.text)
                self.text += s
                self.entities.append({"start": start, "end": start + len(s), "type": t, "text": s})
                idx.append(len(self.entities) - 1)
            else:
                self.text += p
        return idx

    def rel(self, a, b, t):
        self.relations.append({"source": a, "target": b, "type": t})


def novel_names(rng, n):
    out = set()
    while len(out) < n:
        out.add((rng.choice(SYL) + rng.choice(SYL) + rng.choice(SYL)).capitalize())
    return sorted(out)


def main():
    rng = random.Random(5151)
    names = novel_names(rng, 2 * N_REPORTS)
    rng.shuffle(names)
    introduced = []  # (name, type, report index)
    reports = []
    for i in range(N_REPORTS):
        d = Doc()
        batch = i // BATCH
        g, g2 = rng.sample(GROUPS, 2)
        tool = rng.choice(TOOLS)
        mal = rng.choice(MALWARE)
        country = rng.choice(COUNTRIES)

        a, b = d.add((g, "intrusion-set"), " used ", (tool, "tool"), ".")
        d.rel(a, b, "uses")
        a, b = d.add((g2, "intrusion-set"), " targeted organizations in ", (country, "location"), ".")
        d.rel(a, b, "targets")
        a, b = d.add("Later ", (g, "intrusion-set"), " deployed ", (mal, "malware"), " on the servers.")
        d.rel(a, b, "uses")

        n1, n2 = names[2 * i], names[2 * i + 1]
        kind = i % 3
        if kind == 0:
            d.add("Researchers found a new backdoor dubbed ", (n1, "malware"), ".")
            introduced.append((n1, "malware", i))
        elif kind == 1:
            d.add("Analysts observed a group known as ", (n1, "intrusion-set"), " in the network.")
            introduced.append((n1, "intrusion-set", i))
        else:
            d.add("Researchers named the tool ", (n1, "tool"), ".")
            introduced.append((n1, "tool", i))
        a, b = d.add((g2, "intrusion-set"), " deployed a loader called ", (n2, "malware"), ".")
        d.rel(a, b, "uses")
        introduced.append((n2, "malware", i))

        if batch > 0:
            earlier = [x for x in introduced if x[2] // BATCH < batch]
            for name, typ, _ in rng.sample(earlier, 2):
                if typ == "intrusion-set":
                    d.add("Analysts linked the activity to ", (name, typ), ".")
                else:
                    a, b = d.add("Afterwards ", (g, "intrusion-set"), " used ", (name, typ), " again.")
                    d.rel(a, b, "uses")
        d.add(rng.choice(FILLER))
        reports.append(d)

    os.makedirs("data/eval/reports", exist_ok=True)
    for i, d in enumerate(reports):
        for e in d.entities:
            assert d.text[e["start"]:e["end"]] == e["text"]
        with open(f"data/eval/reports/r{i + 1:02d}.json", "w") as f:
            json.dump({"document": d.text, "entities": d.entities, "relations": d.relations}, f, indent=1)
            f.write("\n")
    seed = ([{"type": "intrusion-set", "name": n} for n in GROUPS] + [{"type": "tool", "name": n} for n in TOOLS] +
            [{"type": "malware", "name": n} for n in MALWARE])
    with open("data/eval/seed_kb.json", "w") as f:
        json.dump({"entities": seed, "locations_csv": "../locations.csv"}, f, indent=1)
        f.write("\n")
    print(N_REPORTS, "reports,", len(introduced), "introduced entities")


if __name__ == "__main__":
    main()
