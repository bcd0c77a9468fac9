"""Tweet normalization and CUA / CA / TCA prompt rendering."""

from __future__ import annotations

import datetime as dt
import re
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Literal, Mapping, Sequence

import emoji

from ._io import read_jsonl, write_jsonl
from .labeling import LabelSeries
from .market_data import IndicatorSeries, IndicatorThresholds, discretize_indicator
from .trend import DataError, Trend, TrendlabError

Mode = Literal["CUA", "CA", "TCA"]
MODES: tuple[str, ...] = ("CUA", "CA", "TCA")

_URL = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_MENTION = re.compile(r"(?<![\w@])@\w+")
_HASHTAG = re.compile(r"(?<![\w#])#(\w+)")
_WS = re.compile(r"\s+")

DEFAULT_PROMO_RULES: dict[str, str] = {
    "promo_airdrop": r"\bair\s?drops?\b",
    "promo_giveaway": r"\bgive\s?aways?\b",
    "promo_claim": r"\bclaim\s+(?:now|yours|your|free)\b",
    "promo_referral": r"\b(?:referral|ref)\s+(?:code|link)\b|\bpromo\s+code\b",
    "promo_signup": r"\b(?:sign\s?up|register)\s+(?:now|today|here)\b",
    "promo_group": r"\bjoin\s+(?:our|my|the)\s+(?:telegram|discord|group|channel)\b",
    "promo_free_money": r"\bfree\s+(?:btc|bitcoin|crypto|tokens?|coins?|money)\b",
    "promo_pump": r"\b\d+x\s+(?:gem|guaranteed)\b|\bguaranteed\s+(?:profit|returns?)\b",
}

# Closed vocabulary stand-in for lemmatization. No value may also be a key,
# which keeps normalization idempotent.
DEFAULT_LEMMAS: dict[str, str] = {
    "bitcoins": "bitcoin", "btcs": "btc", "satoshis": "satoshi", "sats": "sat",
    "coins": "coin", "tokens": "token", "altcoins": "altcoin", "miners": "miner",
    "mined": "mine", "mining": "mine", "hodling": "hodl", "hodled": "hodl", "hodler": "hodl",
    "hodlers": "hodl", "pumps": "pump", "pumped": "pump", "pumping": "pump",
    "dumps": "dump", "dumped": "dump", "dumping": "dump", "crashes": "crash",
    "crashed": "crash", "crashing": "crash", "rallies": "rally", "rallied": "rally",
    "rallying": "rally", "bulls": "bull", "bears": "bear", "whales": "whale",
    "exchanges": "exchange", "wallets": "wallet", "trades": "trade", "traded": "trade",
    "trading": "trade", "traders": "trader", "buys": "buy", "buying": "buy", "bought": "buy",
    "sells": "sell", "selling": "sell", "sold": "sell", "rises": "rise", "rising": "rise",
    "rose": "rise", "falls": "fall", "falling": "fall", "fell": "fall", "gains": "gain",
    "losses": "loss", "prices": "price", "markets": "market", "mooning": "moon",
}


@dataclass(frozen=True)
class FilterRules:
    """Promo/advert patterns (matched case-insensitively on the raw text) and lemma map."""

    promo: Mapping[str, str] = field(default_factory=lambda: dict(DEFAULT_PROMO_RULES))
    lemmas: Mapping[str, str] = field(default_factory=lambda: dict(DEFAULT_LEMMAS))

    def __post_init__(self):
        clash = set(self.lemmas) & set(self.lemmas.values())
        if clash:
            raise ValueError(f"lemma targets must not also be sources: {sorted(clash)}")
        object.__setattr__(self, "_compiled",
                           tuple((rid, re.compile(p, re.IGNORECASE)) for rid, p in self.promo.items()))

    def match_promo(self, text: str) -> str | None:
        for rule_id, pat in self._compiled:  # type: ignore[attr-defined]
            if pat.search(text):
                return rule_id
        return None


@dataclass(frozen=True)
class RawTweet:
    id: str
    timestamp: dt.date
    text: str


@dataclass(frozen=True)
class CleanTweet:
    id: str
    day: dt.date
    normalized_text: str
    hashtags: tuple[str, ...] = ()
    emojis: tuple[str, ...] = ()
    dropped: bool = False
    drop_rule: str | None = None


@dataclass(frozen=True)
class PromptContext:
    day: dt.date
    previous_label: Trend
    roc_term: Trend
    rsi_term: Trend


@dataclass(frozen=True)
class PromptRecord:
    id: str
    day: dt.date
    mode: str
    prompt_text: str
    label: Trend


class NoContextError(TrendlabError):
    pass


def _strip_punctuation(text: str) -> str:
    out = []
    for ch in text:
        cat = unicodedata.category(ch)
        if ch in "'’":
            continue  # don't -> dont rather than "don t"
        if cat[0] in "PS" or cat == "Cf":
            out.append(" ")
        else:
            out.append(ch)
    return "".join(out)


def preprocess_tweet(raw: RawTweet, rules: FilterRules | None = None) -> CleanTweet:
    """Normalize one tweet.

    Order: promo screen on the raw text; URL and mention removal; hashtag and
    emoji extraction (both removed from the text); lowercasing; punctuation
    and symbol stripping; whitespace collapse; lemma map on tokens.
    """
    rules = rules or _DEFAULT_RULES
    if not raw.text or not raw.text.strip():
        raise DataError(f"tweet {raw.id}: empty text")
    text = raw.text
    promo = rules.match_promo(text)
    text = _URL.sub(" ", text)
    text = _MENTION.sub(" ", text)
    hashtags = tuple("#" + h.lower() for h in _HASHTAG.findall(text))
    text = _HASHTAG.sub(" ", text)
    emojis = tuple(e["emoji"] for e in emoji.emoji_list(text))
    text = emoji.replace_emoji(text, replace=" ")
    text = _strip_punctuation(text.lower())
    tokens = [rules.lemmas.get(t, t) for t in _WS.split(text) if t]
    normalized = " ".join(tokens)
    drop_rule = promo if promo is not None else ("empty" if not normalized else None)
    return CleanTweet(raw.id, raw.timestamp, normalized, hashtags, emojis,
                      dropped=drop_rule is not None, drop_rule=drop_rule)


_DEFAULT_RULES = FilterRules()


def build_context(day: dt.date, labels: LabelSeries, roc: IndicatorSeries, rsi: IndicatorSeries,
                  roc_th: IndicatorThresholds, rsi_th: IndicatorThresholds) -> PromptContext:
    """Market context for tweets posted on ``day``.

    The previous label is that of the latest window already closed before
    ``day`` begins (end day strictly earlier), so a window whose barrier is
    touched on ``day`` itself is not yet known. Indicator terms use values
    from ``day - 1``.
    """
    k = None
    for idx, w in enumerate(labels.windows):
        if w.start_day > day:
            break
        if w.start_day <= day < w.end_day:
            k = idx
    if k is None:
        raise NoContextError(f"{day} lies outside the labeled range")
    prev = None
    for w in labels.windows[:k]:
        if w.end_day < day:
            prev = w
    if prev is None:
        raise NoContextError(f"{day}: no completed label window precedes the day")
    before = day - dt.timedelta(days=1)
    try:
        roc_val = roc.at(before)
        rsi_val = rsi.at(before)
    except KeyError as exc:
        raise NoContextError(f"{day}: indicators undefined on {before}") from exc
    return PromptContext(
        day=day,
        previous_label=prev.label,
        roc_term=discretize_indicator(roc_val, "ROC", roc_th),
        rsi_term=discretize_indicator(rsi_val, "RSI", rsi_th),
    )


_MONTHS = ("January", "February", "March", "April", "May", "June", "July", "August", "September",
           "October", "November", "December")


def format_date(day: dt.date) -> str:
    """``2020, January, 01``; month names are fixed English, independent of locale."""
    return f"{day.year}, {_MONTHS[day.month - 1]}, {day.day:02d}"


def render_prompt(ctx: PromptContext | None, tweet: CleanTweet, mode: str, label: Trend) -> PromptRecord:
    """Render the prompt text for ``mode`` and pair it with the day's label."""
    if tweet.dropped:
        raise DataError(f"tweet {tweet.id} was dropped ({tweet.drop_rule})")
    if mode == "CUA":
        text = tweet.normalized_text
    elif mode in ("CA", "TCA"):
        if ctx is None:
            raise NoContextError(f"{mode} prompts need market context")
        if ctx.day != tweet.day:
            raise DataError(f"context day {ctx.day} != tweet day {tweet.day}")
        text = (f"Previous Label: {ctx.previous_label.term}, ROC: {ctx.roc_term.term}, "
                f"RSI: {ctx.rsi_term.term}, Tweet: {tweet.normalized_text}")
        if mode == "TCA":
            text = f"Date: {format_date(tweet.day)}, " + text
    else:
        raise ValueError(f"unknown prompt mode {mode!r}")
    return PromptRecord(tweet.id, tweet.day, mode, text, label)


# --------------------------------------------------------------------------- file formats

def load_tweets(path: str | Path) -> list[RawTweet]:
    out, seen = [], set()
    for line_no, obj in read_jsonl(path):
        try:
            tid = str(obj["id"])
            day = dt.date.fromisoformat(str(obj["timestamp"])[:10])
            text = str(obj["text"])
        except (KeyError, ValueError) as exc:
            raise DataError(f"{path}:{line_no}: bad tweet record ({exc})") from None
        if tid in seen:
            raise DataError(f"{path}:{line_no}: duplicate tweet id {tid!r}")
        seen.add(tid)
        out.append(RawTweet(tid, day, text))
    return out


def write_tweets(tweets: Iterable[RawTweet], path: str | Path) -> int:
    return write_jsonl(path, ({"id": t.id, "timestamp": t.timestamp.isoformat(), "text": t.text}
                              for t in tweets))


def export_dataset(records: Sequence[PromptRecord], path: str | Path) -> int:
    if not records:
        raise DataError("refusing to export an empty prompt dataset")
    return write_jsonl(path, ({"id": r.id, "day": r.day.isoformat(), "mode": r.mode,
                               "prompt": r.prompt_text, "label": r.label.term} for r in records))


def import_dataset(path: str | Path) -> list[PromptRecord]:
    out = []
    for line_no, obj in read_jsonl(path):
        try:
            out.append(PromptRecord(str(obj["id"]), dt.date.fromisoformat(obj["day"]), obj["mode"],
                                    obj["prompt"], Trend.parse(obj["label"])))
        except (KeyError, ValueError) as exc:
            raise DataError(f"{path}:{line_no}: bad prompt record ({exc})") from None
    return out
