"""Independent scripted oracle for the 5-pair golden linguistics fixture.

Implemented from first principles, separately from the library code:
- segmentation: recursive longest-match with its own loop shape
- LCS: top-down memoized recursion (library uses bottom-up rolling rows)
- rates: plain set arithmetic
Run once; its printed numbers get frozen into tests/test_lingstats.py.
"""

from functools import lru_cache
import re
import unicodedata

LEXICON = {
    "học sinh": "Noun", "giáo viên": "Noun", "phát triển": "Verb",
    "văn hóa": "Noun", "xây dựng": "Verb", "truyền thống": "Noun",
    "lâu đời": "Adjective", "thành phố": "Noun", "lịch sử": "Noun",
    "khí hậu": "Noun", "đặc biệt": "Adjective", "kinh tế": "Noun",
    "quốc gia": "Noun", "du lịch": "Noun", "thu hút": "Verb",
    "bảo tàng": "Noun", "trưng bày": "Verb", "kiến trúc": "Noun",
    "cổ kính": "Adjective", "tham quan": "Verb", "nông nghiệp": "Noun",
    "cung cấp": "Verb", "sản phẩm": "Noun", "quan trọng": "Adjective",
    "nhà máy": "Noun", "sản xuất": "Verb", "hiện đại": "Adjective",
    "và": "Other", "có": "Verb", "của": "Preposition", "không": "Adjunct",
    "chưa": "Adjunct", "nhiều": "Adjective", "người": "Noun", "nào": "Other",
    "rất": "Adjunct", "nơi": "Noun", "đây": "Other", "nhanh": "Adjective",
}

PAIRS = [
    # (label, claim, evidence sentences)
    ("SUPPORTED", "Học sinh và giáo viên phát triển truyền thống.",
     ("Học sinh Hà Nội phát triển văn hóa.", "Giáo viên xây dựng truyền thống lâu đời.")),
    ("SUPPORTED", "Thành phố có khí hậu đặc biệt và lịch sử lâu đời.",
     ("Thành phố có lịch sử lâu đời.", "Khí hậu nơi đây rất đặc biệt.")),
    ("SUPPORTED", "Kinh tế và du lịch của quốc gia phát triển.",
     ("Kinh tế quốc gia phát triển nhanh.", "Du lịch thu hút nhiều người.")),
    ("REFUTED", "Bảo tàng không trưng bày kiến trúc cổ kính nào.",
     ("Bảo tàng trưng bày kiến trúc cổ kính.", "Nhiều người tham quan hằng năm.")),
    ("REFUTED", "Nhà máy chưa sản xuất sản phẩm nông nghiệp.",
     ("Nông nghiệp cung cấp sản phẩm quan trọng.", "Nhà máy sản xuất hiện đại.")),
]

POS_ORDER = ("Noun", "Verb", "Adjective", "Preposition", "Adjunct", "Other")


def toks(text):
    out = []
    for raw in unicodedata.normalize("NFC", text).split():
        t = re.sub(r"^[\W_]+|[\W_]+$", "", raw, flags=re.UNICODE)
        if t:
            out.append(t)
    return out


def seg(text):
    syllables = toks(text)
    lex_lower = {k.lower(): v for k, v in LEXICON.items()}
    max_len = max(len(k.split()) for k in lex_lower)

    def go(i):
        if i >= len(syllables):
            return []
        for L in range(min(max_len, len(syllables) - i), 1, -1):
            cand = " ".join(syllables[i:i + L]).lower()
            if cand in lex_lower:
                return [" ".join(syllables[i:i + L])] + go(i + L)
        return [syllables[i]] + go(i + 1)

    words = go(0)
    pos = [lex_lower.get(w.lower(), None) or "Other" for w in words]
    return words, pos


def lcs_memo(a, b):
    a, b = tuple(a), tuple(b)

    @lru_cache(maxsize=None)
    def rec(i, j):
        if i == len(a) or j == len(b):
            return 0
        if a[i] == b[j]:
            return 1 + rec(i + 1, j + 1)
        return max(rec(i + 1, j), rec(i, j + 1))

    return rec(0, 0)


def collapse(text):
    return re.sub(r"\s+", " ", unicodedata.normalize("NFC", text)).strip()


rows = {}
for label, claim, evidence in PAIRS:
    ev_text = " ".join(evidence)
    cw, cpos = seg(claim)
    ew, _ = seg(ev_text)
    cset = []
    seen = set()
    for w in cw:
        if w.lower() not in seen:
            seen.add(w.lower())
            cset.append(w.lower())
    eset = {w.lower() for w in ew}
    new = [w for w in cset if w not in eset]
    rate = len(new) / len(cset)
    first_pos = {}
    for w, p in zip(cw, cpos):
        first_pos.setdefault(w.lower(), p)
    dist = {p: 0.0 for p in POS_ORDER}
    if new:
        for w in new:
            dist[first_pos[w]] += 1
        dist = {p: v / len(new) for p, v in dist.items()}
    jac = len(set(cset) & eset) / len(set(cset) | eset)
    lcs = lcs_memo(list(collapse(claim)), list(collapse(ev_text)))
    rows.setdefault(label, []).append((rate, dist, jac, lcs, new))

print("pair-level details:")
for label, entries in rows.items():
    for i, (rate, dist, jac, lcs, new) in enumerate(entries):
        print(f"  {label}[{i}]: rate={rate:.6f} jac={jac:.6f} lcs={lcs} new={new}")
        print(f"     dist={ {k: round(v, 4) for k, v in dist.items() if v} }")

print("\nfrozen CSV rows (model=alpha, stage=uncalibrated, unit=character):")
for label in ("SUPPORTED", "REFUTED"):
    entries = rows[label]
    n = len(entries)
    mean_rate = sum(e[0] for e in entries) / n
    mean_jac = sum(e[2] for e in entries) / n
    mean_lcs = sum(e[3] for e in entries) / n
    with_new = [e for e in entries if e[4]]
    if with_new:
        mean_dist = {
            p: sum(e[1][p] for e in with_new) / len(with_new) for p in POS_ORDER
        }
    else:
        mean_dist = {p: 0.0 for p in POS_ORDER}
    cells = [
        "alpha", "uncalibrated", label, str(n), f"{100 * mean_rate:.2f}",
        *[f"{100 * mean_dist[p]:.2f}" for p in POS_ORDER],
        f"{100 * mean_jac:.2f}", f"{mean_lcs:.2f}", "character",
    ]
    print(",".join(cells))
