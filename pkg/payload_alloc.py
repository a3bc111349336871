"""
Equal-share payload division across a task coalition
"""
import numpy as np

from config import config
from errors import PreconditionError


def allocate_average(winner_row, remaining, demand, tol=None):
    """
    Divide a task demand equally over its winners

    Members whose remaining payload is below the current share are frozen at
    their remaining amount and leave the division set; the shortfall is shared
    again among the rest until the demand is covered or nobody is left.

    Args:
        winner_row: boolean vector, True for coalition members
        remaining: remaining payload per robot
        demand: payload the task still needs

    Returns:
        Assigned payload per robot (zero for non-members)
    """
    tol = config.TOLERANCE if tol is None else tol
    winners = np.asarray(winner_row, dtype=bool)
    remaining = np.asarray(remaining, dtype=float)

    if demand < 0:
        raise PreconditionError(f"demand must be non-negative, got {demand}")
    if (remaining < 0).any():
        raise PreconditionError("remaining payload must be non-negative")

    output = np.zeros(len(remaining))
    members = np.flatnonzero(winners)
    if len(members) == 0 or demand <= tol:
        return output

    if remaining[members].sum() <= demand:
        output[members] = remaining[members]
        return output

    residual = float(demand)
    active = list(members)
    while residual > tol and active:
        share = residual / len(active)
        saturated = [k for k in active if remaining[k] <= share]
        if not saturated:
            for k in active:
                output[k] = share
            residual = 0.0
            break
        for k in saturated:
            output[k] = remaining[k]
            residual -= remaining[k]
            active.remove(k)

    return output
