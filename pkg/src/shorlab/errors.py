"""Exception types raised by shorlab."""


class ShorlabError(Exception):
    pass


class NotCoprime(ShorlabError, ValueError):
    """Base shares a factor with the modulus. ``gcd`` holds that factor."""

    def __init__(self, a, N, gcd):
        super().__init__(f"gcd({a}, {N}) = {gcd}")
        self.a = a
        self.N = N
        self.gcd = gcd


class DigitOverflow(ShorlabError, ValueError):
    pass


class ValueOutOfRange(ShorlabError, ValueError):
    pass


class NotInjective(ShorlabError):
    pass


class NotUnitary(ShorlabError, ValueError):
    pass


class MixedRadix(ShorlabError, ValueError):
    pass


class NotZeroed(ShorlabError):
    pass


class TooLarge(ShorlabError, ValueError):
    pass


class LayoutMismatch(ShorlabError, ValueError):
    pass


class InputOutOfRange(ShorlabError):
    pass


class AncillaNotZero(ShorlabError):
    pass


class NotCosetState(ShorlabError):
    def __init__(self, msg, residual=None):
        super().__init__(msg)
        self.residual = residual


class Underflow(ShorlabError):
    pass


class EvenMultiplier(ShorlabError, ValueError):
    pass


class UnknownVariant(ShorlabError, ValueError):
    pass


class FootprintExceeded(ShorlabError):
    pass
