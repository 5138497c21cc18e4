import re

# Unicode-aware: letters and digits are kept, everything else separates.
_SPLIT = re.compile(r"[\W_]+")


def tokenize(text: str | None) -> list[str]:
    """Lowercase, split on non-alphanumeric runs, drop empty tokens."""
    if not text:
        return []
    return [t for t in _SPLIT.split(text.lower()) if t]
