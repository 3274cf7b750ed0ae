#!/usr/bin/env python3
"""Generate the bundled synthetic fixture under data/fixture/.

Two communities discuss eight themes over two weeks. Some themes burst at
known times, and the synthetic exchange price jumps a few buckets after
selected bursts, so the pipeline has cross-excitation to find.
"""

import argparse
import json
import math
import random
from pathlib import Path

START = 1496275200  # 2017-06-01T00:00:00Z, bucket aligned
DAYS = 14
BUCKET = 900

THEMES = {
    "mining": "miner mining hashrate difficulty asic pool reward electricity rig antminer halving block "
              "hardware gpu power farm profitability chip bitmain cooling",
    "exchange": "exchange bitfinex coinbase withdrawal deposit account verification ticket fee kraken gdax "
                "bank transfer wire limit fiat customer delay identity poloniex",
    "scaling": "segwit blocksize fork node lightning transaction mempool capacity upgrade consensus core "
               "unlimited protocol signature channel network developer proposal activation softfork",
    "regulation": "government regulation ban tax sec china law regulator court license legal policy federal "
                  "authority compliance japan korea lawsuit congress etf",
    "wallet": "wallet key seed ledger trezor backup address password paper recovery phrase software electrum "
              "mnemonic encryption storage cold device pin firmware",
    "trading": "price bull bear chart resistance moon dip rally correction trend volume candle breakout target "
               "position margin short leverage analysis pattern",
    "security": "hack scam theft phishing hacker attack vulnerability breach malware stolen fraud ponzi victim "
                "exploit insurance investigation police bounty incident warning",
    "adoption": "merchant payment store coffee shop retailer adoption card purchase service company startup "
                "business pizza restaurant atm remittance consumer microsoft steam",
}
THEME_NAMES = list(THEMES)

# Words in most documents; pruned by the document-frequency ceiling.
COMMON = ["bitcoin", "btc", "crypto"]
FILLER = ("the a an is are was i you we it this that to of and in on for with about what just so "
          "think want see know say need feel look").split()

SOURCES = {
    # name: (theme weights, bursting theme, number of regular documents)
    "Bitcoin": ([2, 1, 4, 1, 3, 1, 3, 3], "security", 3000),
    "BitcoinMarkets": ([1, 3, 1, 3, 1, 5, 1, 1], "exchange", 3000),
}


def zipf_weights(n):
    return [1.0 / (i + 1) ** 0.8 for i in range(n)]


def make_text(rng, weights, primary=None):
    if primary is None:
        primary = rng.choices(range(len(THEME_NAMES)), weights=weights)[0]
    secondary = rng.choices(range(len(THEME_NAMES)), weights=weights)[0]
    n_words = max(4, int(rng.gauss(14, 4)))
    words = []
    for _ in range(n_words):
        theme = primary if rng.random() < 0.75 else secondary
        vocab = THEMES[THEME_NAMES[theme]].split()
        words.append(rng.choices(vocab, weights=zipf_weights(len(vocab)))[0])
    for w in COMMON:
        if rng.random() < 0.6:
            words.insert(rng.randrange(len(words) + 1), w)
    text = []
    for w in words:
        text.append(w)
        if rng.random() < 0.6:
            text.append(rng.choice(FILLER))
    cut = max(2, len(text) // 3)
    return " ".join(text[:cut]), " ".join(text[cut:])


def submissions(rng, name, weights, burst_theme, n_regular, burst_buckets):
    span = DAYS * 86400
    records = []
    for _ in range(n_regular):
        records.append((START + rng.randrange(span), None))
    primary = THEME_NAMES.index(burst_theme)
    for b in burst_buckets:
        for _ in range(rng.randint(18, 26)):
            records.append((START + b * BUCKET + rng.randrange(BUCKET), primary))
    out = []
    for i, (t, theme) in enumerate(records):
        title, body = make_text(rng, weights, theme)
        rec = {"id": f"{name[:2].lower()}{i:05d}", "created_utc": t, "subreddit": name, "title": title}
        if body:
            rec["selftext"] = body
        out.append(rec)
    rng.shuffle(out)
    return out


def pick_buckets(rng, count, n_buckets, taken):
    chosen = []
    while len(chosen) < count:
        b = rng.randrange(8, n_buckets - 8)
        if all(abs(b - t) > 12 for t in taken + chosen):
            chosen.append(b)
    return sorted(chosen)


def ticks(rng, n_buckets, up_buckets, down_buckets):
    price = 2400.0
    rows = []
    shocks = {b: 0.035 for b in up_buckets}
    shocks.update({b: -0.035 for b in down_buckets})
    for minute in range(n_buckets * BUCKET // 60):
        t = START + minute * 60
        bucket = (t - START) // BUCKET
        if (t - START) % BUCKET == 0 and bucket in shocks:
            price *= math.exp(shocks[bucket])
        price *= math.exp(rng.gauss(0.0, 0.0004))
        ms = t * 1000 + rng.randrange(60000)
        rows.append(f"{ms},{price:.2f},{rng.uniform(0.01, 4.0):.4f}")
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "data" / "fixture"))
    parser.add_argument("--seed", type=int, default=20170601)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    n_buckets = DAYS * 86400 // BUCKET

    taken = []
    bursts = {}
    for name, (_, theme, _) in SOURCES.items():
        bursts[name] = pick_buckets(rng, 12, n_buckets, taken)
        taken += bursts[name]
    # Security bursts on Bitcoin precede drops; exchange bursts on
    # BitcoinMarkets precede rises. A few moves are unrelated.
    down = [b + rng.randint(1, 4) for b in bursts["Bitcoin"][:9]] + pick_buckets(rng, 3, n_buckets, taken)
    taken += down
    up = [b + rng.randint(2, 6) for b in bursts["BitcoinMarkets"][:9]] + pick_buckets(rng, 3, n_buckets, taken)

    for name, (weights, theme, n_regular) in SOURCES.items():
        recs = submissions(rng, name, weights, theme, n_regular, bursts[name])
        with open(out / f"{name.lower()}.jsonl", "w", encoding="utf-8", newline="\n") as f:
            for r in recs:
                f.write(json.dumps(r, separators=(",", ":")) + "\n")

    with open(out / "btc_ticks.csv", "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(ticks(rng, n_buckets, set(up), set(down))) + "\n")

    truth = {"bursts": bursts, "btc_up_buckets": sorted(up), "btc_down_buckets": sorted(down),
             "grid_start": START, "bucket_width": BUCKET}
    (out / "truth.json").write_text(json.dumps(truth, indent=2) + "\n")


if __name__ == "__main__":
    main()
