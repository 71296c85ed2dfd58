#!/usr/bin/env python3
"""Writes the bundled synthetic corpus under data/synthetic/.

Revenue follows a slowing growth path with noise. Each quarter gets 24
template reviews; the share of favourable wording for an aspect tracks
that quarter's growth with an aspect-specific sign, so perceptions carry
signal about the target. Output is deterministic for a given seed.
"""

import argparse
import json
import math
import random
from pathlib import Path

ASPECT_PHRASES = {
    "greater_scalability": ["scalability", "auto scaling", "elasticity"],
    "faster_access": ["quick access", "easy access", "quick setup"],
    "managing_multiple_services": ["multiple services", "one console", "service integration"],
    "security_concerns": ["security", "encryption", "secured"],
    "cost_savings": ["pricing", "costs", "savings"],
    "higher_availability": ["uptime", "availability", "reliability"],
    "lack_of_control": ["control", "visibility", "governance"],
    "higher_performance": ["performance", "latency", "throughput"],
    "lack_of_expertise": ["learning curve", "documentation", "skills"],
    "it_staff_efficiency": ["productivity", "automation", "maintenance"],
    "provider_lock_in": ["lock in", "migration", "portability"],
    "business_continuity": ["backup", "disaster recovery", "failover"],
    "capex_to_opex": ["subscription", "upfront cost", "opex"],
    "after_sales_experience": ["support", "customer service", "troubleshooting"],
    "market_responsiveness": ["new features", "innovation", "roadmap"],
    "marketing_execution": ["free tier", "reputation", "credits"],
}

# +1: favourable wording rises with growth, -1: falls with growth.
ASPECT_SIGN = {
    "greater_scalability": 1, "faster_access": 1, "managing_multiple_services": 1, "security_concerns": -1,
    "cost_savings": 1, "higher_availability": 1, "lack_of_control": -1, "higher_performance": 1,
    "lack_of_expertise": -1, "it_staff_efficiency": 1, "provider_lock_in": -1, "business_continuity": 1,
    "capex_to_opex": 1, "after_sales_experience": 1, "market_responsiveness": 1, "marketing_execution": 1,
}

POSITIVE = [
    "The {p} is excellent and we are happy with it.",
    "Great {p}, it works really well for our team.",
    "We love the {p}; it is smooth and easy.",
    "Impressive {p} and very good value.",
    "The {p} has been solid and helpful!",
]
NEGATIVE = [
    "The {p} is poor and frustrating.",
    "Terrible {p}, we had serious problems.",
    "We are disappointed with the {p}.",
    "The {p} is awkward and painful to deal with.",
    "Bad {p}; it caused delays and headaches.",
]
NEUTRAL = [
    "We reviewed the {p} this quarter.",
    "The {p} is documented in the console.",
]
JOINERS = [" Also, ", " Meanwhile, ", " "]


def quarters(start, count):
    year, q = start
    for _ in range(count):
        yield f"{year}Q{q}"
        q += 1
        if q == 5:
            year, q = year + 1, 1


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "data" / "synthetic"))
    ap.add_argument("--seed", type=int, default=20181231)
    ap.add_argument("--per-quarter", type=int, default=24)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    rev_quarters = list(quarters((2015, 2), 15))
    revenue = [1824.0]
    growth = []
    for i in range(1, len(rev_quarters)):
        g = 0.12 - 0.045 * (i / len(rev_quarters)) + 0.025 * math.sin(i * 1.3) + rng.gauss(0.0, 0.008)
        growth.append(g)
        revenue.append(round(revenue[-1] * (1.0 + g), 1))
    with open(out / "revenue.csv", "w", newline="") as f:
        f.write("quarter,revenue\n")
        for q, r in zip(rev_quarters, revenue):
            f.write(f"{q},{r}\n")

    g_of = dict(zip(rev_quarters[1:], growth))
    g_min, g_max = min(growth), max(growth)
    aspects = list(ASPECT_PHRASES)
    with open(out / "reviews.jsonl", "w", newline="") as f:
        for q in rev_quarters[2:]:
            level = (g_of[q] - g_min) / (g_max - g_min)
            for k in range(args.per_quarter):
                n_aspects = 1 if rng.random() < 0.6 else 2
                parts = []
                for a in rng.sample(aspects, n_aspects):
                    p_pos = 0.2 + 0.6 * (level if ASPECT_SIGN[a] > 0 else 1.0 - level)
                    u = rng.random()
                    if u < 0.1:
                        tpl = rng.choice(NEUTRAL)
                    elif u < 0.1 + 0.9 * p_pos:
                        tpl = rng.choice(POSITIVE)
                    else:
                        tpl = rng.choice(NEGATIVE)
                    parts.append(tpl.format(p=rng.choice(ASPECT_PHRASES[a])))
                if len(parts) == 1:
                    text = parts[0]
                else:
                    joiner = rng.choice(JOINERS)
                    second = parts[1] if joiner == " " else parts[1][0].lower() + parts[1][1:]
                    text = parts[0] + joiner + second
                source = rng.choice(["g2crowd", "trustradius", "gartner", "spiceworks"])
                f.write(json.dumps({"id": f"{q}-{k + 1:03d}", "quarter": q, "text": text, "source": source}) + "\n")


if __name__ == "__main__":
    main()
