"""Input-validation helpers shared across modules."""

from __future__ import annotations

from sklearn.exceptions import NotFittedError


class DataError(ValueError):
    """Input data violates an operation's contract or invariant."""


def check_fitted(estimator, attribute: str) -> None:
    """Raise NotFittedError unless the fitted attribute is present."""
    if getattr(estimator, attribute, None) is None:
        raise NotFittedError(
            f"{type(estimator).__name__} is not fitted yet; call fit() first"
        )


def require_pos_tags(sentence) -> None:
    for tok in sentence.tokens:
        if not tok.pos:
            raise DataError(
                f"token {tok.index} ({tok.text!r}) in sentence "
                f"{sentence.sent_id!r} has no POS tag"
            )


def require_same_length(a, b, what: str) -> None:
    if len(a) != len(b):
        raise DataError(f"{what}: length mismatch ({len(a)} vs {len(b)})")
