"""Exception hierarchy for the aeslab package.

Everything derives from AeslabError so callers can catch the whole family;
the cryptographic failures additionally derive from ValueError because that
is what most Python crypto code raises and tests expect.
"""


class AeslabError(Exception):
    """Base class for all aeslab errors."""


class InvalidKeyError(AeslabError, ValueError):
    """Key material has the wrong length or does not match its variant."""


class PaddingError(AeslabError, ValueError):
    """PKCS#7 padding is malformed (zero, oversized, or inconsistent tail)."""


class AuthenticationError(AeslabError, ValueError):
    """AEAD tag verification failed; plaintext is withheld."""


class ModeMismatchError(AeslabError, ValueError):
    """A sealed message was handed to the wrong mode's decrypt routine."""


class NonceError(AeslabError, ValueError):
    """Nonce/IV length is outside the bounds the mode allows."""


class MessageFormatError(AeslabError, ValueError):
    """A serialized sealed-message container failed to parse."""


class ImageFormatError(AeslabError, ValueError):
    """A PPM/PGM file is unsupported, malformed, or truncated."""


class InvalidInputError(AeslabError, ValueError):
    """An operation received input outside its documented domain."""
