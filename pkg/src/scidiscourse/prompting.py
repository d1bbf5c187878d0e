"""Prompt construction and response parsing for the LLM classification route.

The instruction text lives in template resource files shipped with the
package rather than in string literals, so the exact wording is
auditable and checksummed.  The wording intentionally repeats the
category list twice; that repetition is part of the fixed text, not an
accident to clean up.  A rendered prompt is split into a system part
(the assistant role description, the first sentence) and a user part
(everything else including the tweet); ``full_text`` joins them back
into the single paragraph the parts were cut from.

Few-shot rendering appends retrieved example tweets after the
instruction text, introduced by a fixed header line, one
``Tweet: .../Labels: ...`` block per example, most similar example
first.

Model responses are free text.  ``parse_label_response`` extracts the
final bracketed numeric triple and coerces it to a binary label vector;
anything unparseable comes back as a ``ParseFailure`` value instead of
an exception, so batch callers can apply their own fallback policy.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from importlib import resources
from typing import Sequence

from .corpus import _NUMBER, LabelVector
from .retrieval import ScoredExample

TWEET_SLOT = "{tweet}"
TEMPLATE_FILES = ("system.txt", "user.txt", "few_shot_header.txt")

# A label triple is three bare numbers in square brackets, e.g. [1.0, 0, 0.0].
_TRIPLE_RE = re.compile(
    r"\[\s*(" + _NUMBER + r")\s*,\s*(" + _NUMBER + r")\s*,\s*(" + _NUMBER + r")\s*\]"
)


class PromptError(ValueError):
    """Raised for invalid template content or render arguments."""


def _read_template(name: str) -> str:
    text = resources.files(__package__).joinpath("templates", name).read_text("utf-8")
    # Template files end with a single newline that is not part of the prompt.
    return text.removesuffix("\n")


@dataclass(frozen=True)
class PromptTemplate:
    """The instruction text both prompt variants are built from.

    ``user_text_template`` must contain exactly one ``{tweet}`` slot; the
    other two parts must contain none, so substitution can never touch
    them.
    """

    system_text: str
    user_text_template: str
    examples_header: str

    def __post_init__(self) -> None:
        if not self.system_text.strip():
            raise PromptError("system text is empty")
        if not self.examples_header.strip():
            raise PromptError("examples header is empty")
        slots = self.user_text_template.count(TWEET_SLOT)
        if slots != 1:
            raise PromptError(
                f"user text must contain exactly one {TWEET_SLOT} slot, found {slots}"
            )
        for part, text in (("system", self.system_text), ("header", self.examples_header)):
            if TWEET_SLOT in text:
                raise PromptError(f"{part} text must not contain the {TWEET_SLOT} slot")

    @classmethod
    def load_default(cls) -> "PromptTemplate":
        """Load the templates bundled with the package."""
        return cls(
            system_text=_read_template("system.txt"),
            user_text_template=_read_template("user.txt"),
            examples_header=_read_template("few_shot_header.txt"),
        )

    def checksums(self) -> dict[str, str]:
        """SHA-256 of each template part, keyed by resource file name."""
        parts = {
            "system.txt": self.system_text,
            "user.txt": self.user_text_template,
            "few_shot_header.txt": self.examples_header,
        }
        return {
            name: hashlib.sha256(text.encode("utf-8")).hexdigest() for name, text in parts.items()
        }


@dataclass(frozen=True)
class RenderedPrompt:
    """A prompt ready to send, with provenance of any retrieved shots."""

    system_text: str
    user_text: str
    shot_indices: tuple[int, ...] = ()

    @property
    def full_text(self) -> str:
        """Both parts as the single paragraph they were split from."""
        return self.system_text + " " + self.user_text

    @property
    def content_hash(self) -> str:
        """Digest of ``full_text``; the response cache keys on this."""
        return hashlib.sha256(self.full_text.encode("utf-8")).hexdigest()


def _check_tweet_text(tweet_text: str) -> None:
    if not tweet_text.strip():
        raise PromptError("tweet text is empty")
    if "\n" in tweet_text or "\r" in tweet_text:
        raise PromptError("tweet text must be a single line")


def render_zero_shot(template: PromptTemplate, tweet_text: str) -> RenderedPrompt:
    """Fill the tweet slot; no examples."""
    _check_tweet_text(tweet_text)
    return RenderedPrompt(
        system_text=template.system_text,
        user_text=template.user_text_template.replace(TWEET_SLOT, tweet_text, 1),
    )


def render_few_shot(
    template: PromptTemplate,
    tweet_text: str,
    shots: Sequence[ScoredExample],
) -> RenderedPrompt:
    """Zero-shot text plus retrieved examples appended at the end.

    Shots are laid out most similar first, ties broken by ascending
    tweet index, regardless of the order the caller passes them in.
    Each shot contributes exactly one line starting with ``Labels: ``.
    """
    _check_tweet_text(tweet_text)
    if not shots:
        raise PromptError("few-shot rendering needs at least one shot")
    seen: set[int] = set()
    for shot in shots:
        idx = shot.example.tweet.index
        if idx in seen:
            raise PromptError(f"duplicate shot tweet index {idx}")
        seen.add(idx)
    ordered = sorted(shots, key=lambda s: (-s.similarity, s.example.tweet.index))
    blocks = [
        f"Tweet: {shot.example.tweet.text}\nLabels: {shot.example.labels.serialize()}"
        for shot in ordered
    ]
    base = template.user_text_template.replace(TWEET_SLOT, tweet_text, 1)
    user_text = base + "\n\n" + template.examples_header + "\n" + "\n".join(blocks)
    return RenderedPrompt(
        system_text=template.system_text,
        user_text=user_text,
        shot_indices=tuple(shot.example.tweet.index for shot in ordered),
    )


@dataclass(frozen=True)
class ParseFailure:
    """A response that yielded no label vector.  Carried as a value."""

    raw: str
    reason: str


def parse_label_response(raw: str) -> LabelVector | ParseFailure:
    """Extract a label vector from free-form model output.

    Scans for bracketed triples of numbers and takes the last one, since
    models tend to restate the instruction's examples before answering.
    Each number is binarized at 0.5.  Never raises on string input.
    """
    matches = list(_TRIPLE_RE.finditer(raw))
    if not matches:
        return ParseFailure(raw=raw, reason="no bracketed triple of numbers found")
    last = matches[-1]
    values = [float(group) for group in last.groups()]
    return LabelVector.from_values(values)
