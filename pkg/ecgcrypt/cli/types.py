import click

from ecgcrypt.cipher import R_MAX, R_MIN


class InitialStateType(click.ParamType):
    """Decimal text of the secret logistic map state, strictly inside (0, 1)."""
    name = 'x0'

    def convert(self, value, param, ctx):
        try:
            x0 = float(value)
        except (TypeError, ValueError):
            self.fail('%s is not a decimal number' % value, param, ctx)
        if not 0.0 < x0 < 1.0:
            self.fail('%s is not strictly between 0 and 1' % value, param, ctx)
        return x0

    def __repr__(self):
        return 'INITIAL_STATE'


class GrowthRateType(click.ParamType):
    name = 'r'

    def convert(self, value, param, ctx):
        try:
            r = float(value)
        except (TypeError, ValueError):
            self.fail('%s is not a decimal number' % value, param, ctx)
        if not R_MIN < r <= R_MAX:
            self.fail('%s is outside the chaotic range (%s, %s]' % (value, R_MIN, R_MAX), param, ctx)
        return r

    def __repr__(self):
        return 'GROWTH_RATE'


INITIAL_STATE = InitialStateType()
GROWTH_RATE = GrowthRateType()
