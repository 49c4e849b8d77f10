"""How often each tier gets reviewed as rectifications pile up.

Every rectification in a tier bumps its counter f, and the next attenuation
multiplies the tier's review probability by (1 - alpha*f)^(beta*I), never
going below the tier's floor. Operational steps carry the largest impact
score, so their probability falls fastest but also has the lowest floor.

Run:  python3 demos/attenuation_schedule.py
"""

from dataclasses import replace

from mdcotgen import Dimension, RunConfig
from mdcotgen.errors import InvalidAttenuation
from mdcotgen.rectification import WeightBook, attenuate

config = RunConfig()
book = WeightBook.from_config(config)

print(f"alpha={config.alpha} beta={config.beta}")
print(f"{'f':>2}  " + "  ".join(f"{d.value:>11}" for d in Dimension))
states = {d: book[d] for d in Dimension}
for f in range(0, 11):
    row = []
    for d in Dimension:
        state = replace(states[d], freq=f)
        try:
            w = attenuate(state)
        except InvalidAttenuation:
            # alpha*f has reached 1: the weight can only sit on its floor
            w = state.w_min
        states[d] = replace(state, w_current=w)
        row.append(f"{w:11.4f}")
    print(f"{f:>2}  " + "  ".join(row))

print("\nfloors:", ", ".join(f"{d}={w}" for d, w in config.w_min.items()))
