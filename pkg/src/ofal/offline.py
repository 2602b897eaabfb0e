"""Exact offline optimum: minimum-cost capacitated assignment on the line.

Three independent routes to the same number:

* ``optimal_cost``      -- successive-shortest-path min-cost flow, the
                           metric-agnostic ground truth;
* ``optimal_bruteforce``-- exhaustive enumeration, the independence oracle
                           for small inputs;
* ``noncrossing_dp_cost`` -- a dynamic program over sorted requests that
                           exploits the existence of a non-crossing
                           optimum on a line; the fast path for sweeps.

All three compute on integers after an exact common-denominator rescale.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from fractions import Fraction

from .core import (
    Instance,
    RequestSequence,
    SizeGuardError,
    ValidationError,
    common_scale,
    fraction_str,
    scaled_ints,
    validate_pair,
)

BRUTEFORCE_GUARD = 10**7


@dataclass(frozen=True)
class OptResult:
    """Minimum total cost plus one optimal request->server map."""

    cost: Fraction
    assignment: tuple[int, ...]

    def to_dict(self) -> dict:
        return {"cost": fraction_str(self.cost), "assignment": list(self.assignment)}


def _scaled_problem(inst: Instance, seq: RequestSequence) -> tuple[list[int], list[int], int]:
    values = list(inst.layout.positions) + list(seq.requests)
    scale = common_scale(values)
    servers = scaled_ints(inst.layout.positions, scale)
    requests = scaled_ints(seq.requests, scale)
    return servers, requests, scale


def optimal_cost(inst: Instance, seq: RequestSequence) -> OptResult:
    """Min-cost flow over source -> requests -> servers -> sink.

    Requests have unit supply, server j has capacity c_j, and the
    request->server arc costs |r - s|.  Solved by n successive shortest
    augmenting paths with Dijkstra over potential-reduced costs.
    """
    violation = validate_pair(inst, seq)
    if violation is not None:
        raise ValidationError(violation)
    n = len(seq)
    if n == 0:
        return OptResult(cost=Fraction(0), assignment=())
    servers, requests, scale = _scaled_problem(inst, seq)
    k = len(servers)
    caps = list(inst.capacities)

    cost = [[abs(requests[i] - servers[j]) for j in range(k)] for i in range(n)]
    assigned: list[int] = [-1] * n          # request -> server, -1 = unassigned
    used = [0] * k
    # Potentials for requests and servers keep reduced arc costs nonnegative.
    pot_req = [0] * n
    pot_srv = [0] * k

    INF = float("inf")
    for source in range(n):
        # Dijkstra from the new request over the residual graph; kind 0 is
        # a request node, kind 1 a server node, and the parent arrays
        # reconstruct the augmenting path.
        dist_req = [INF] * n
        dist_srv = [INF] * k
        par_srv = [-1] * k                  # server j reached from request i
        par_req = [-1] * n                  # request i reached back from server j
        dist_req[source] = 0
        heap: list[tuple[int, int, int]] = [(0, 0, source)]  # (dist, kind, idx)
        while heap:
            dval, kind, idx = heapq.heappop(heap)
            if kind == 0:  # request node
                if dval > dist_req[idx]:
                    continue
                base = dval + pot_req[idx]
                for j in range(k):
                    if assigned[idx] == j:
                        continue
                    nd = base + cost[idx][j] - pot_srv[j]
                    if nd < dist_srv[j]:
                        dist_srv[j] = nd
                        par_srv[j] = idx
                        heapq.heappush(heap, (nd, 1, j))
            else:  # server node: residual arcs back to requests it serves
                if dval > dist_srv[idx]:
                    continue
                base = dval + pot_srv[idx]
                for i in range(n):
                    if assigned[i] == idx:
                        nd = base - cost[i][idx] - pot_req[i]
                        if nd < dist_req[i]:
                            dist_req[i] = nd
                            par_req[i] = idx
                            heapq.heappush(heap, (nd, 0, i))
        best_j = -1
        for j in range(k):
            if used[j] < caps[j] and dist_srv[j] < INF:
                if best_j < 0 or dist_srv[j] < dist_srv[best_j]:
                    best_j = j
        if best_j < 0:
            raise ValidationError("no augmenting path; capacity exhausted")
        # Standard potential update, capped at the target distance.
        d_target = dist_srv[best_j]
        for i in range(n):
            if dist_req[i] < INF:
                pot_req[i] += min(dist_req[i], d_target)
        for j in range(k):
            if dist_srv[j] < INF:
                pot_srv[j] += min(dist_srv[j], d_target)
        # Augment: alternate server/request along parent pointers.
        j = best_j
        while True:
            i = par_srv[j]
            prev = assigned[i]
            assigned[i] = j
            if prev == -1:
                break
            j = prev
        used[best_j] += 1

    total = sum(cost[i][assigned[i]] for i in range(n))
    return OptResult(cost=Fraction(total, scale), assignment=tuple(assigned))


def optimal_bruteforce(inst: Instance, seq: RequestSequence) -> OptResult:
    """Exact minimum by depth-first enumeration of feasible assignments.

    The k^n upper bound on the number of assignments must stay within
    BRUTEFORCE_GUARD.  Ties on cost keep the lexicographically smallest
    assignment vector.
    """
    violation = validate_pair(inst, seq)
    if violation is not None:
        raise ValidationError(violation)
    n = len(seq)
    k = inst.k
    if n > 0 and k**n > BRUTEFORCE_GUARD:
        raise SizeGuardError(f"enumeration guard: {k}^{n} > {BRUTEFORCE_GUARD}")
    servers, requests, scale = _scaled_problem(inst, seq)
    caps = list(inst.capacities)
    best_cost: list[int | None] = [None]
    best_assignment: list[tuple[int, ...]] = [()]
    current: list[int] = []

    def dfs(t: int, acc: int) -> None:
        if best_cost[0] is not None and acc > best_cost[0]:
            return
        if t == n:
            if best_cost[0] is None or acc < best_cost[0]:
                best_cost[0] = acc
                best_assignment[0] = tuple(current)
            return
        r = requests[t]
        for j in range(k):
            if caps[j] == 0:
                continue
            caps[j] -= 1
            current.append(j)
            dfs(t + 1, acc + abs(r - servers[j]))
            current.pop()
            caps[j] += 1

    dfs(0, 0)
    assert best_cost[0] is not None
    return OptResult(cost=Fraction(best_cost[0], scale), assignment=best_assignment[0])


def _dp_cost_scaled(servers: list[int], caps: list[int], requests: list[int]) -> int:
    """Core DP on scaled ints: assign sorted requests to servers in order.

    A non-crossing optimum matches the sorted requests to a sorted multiset
    of server slots, so each server serves a contiguous block.  dp[t] is
    the best cost of the first t sorted requests; server j extends it by a
    block of up to c_j requests.
    """
    n = len(requests)
    reqs = sorted(requests)
    INF = float("inf")
    dp: list[int | float] = [0] + [INF] * n
    for s, c in zip(servers, caps):
        ndp: list[int | float] = list(dp)
        # prefix[t] = sum of |r_u - s| for u < t
        prefix = [0] * (n + 1)
        for t in range(n):
            prefix[t + 1] = prefix[t] + abs(reqs[t] - s)
        for t in range(1, n + 1):
            lo = max(0, t - c)
            best = ndp[t]
            for m in range(lo, t):
                if dp[m] == INF:
                    continue
                cand = dp[m] + prefix[t] - prefix[m]
                if cand < best:
                    best = cand
            ndp[t] = best
        dp = ndp
    if dp[n] == INF:
        raise ValidationError("capacity exhausted in dp")
    return int(dp[n])


def noncrossing_dp_cost(inst: Instance, seq: RequestSequence) -> Fraction:
    """Optimal cost via the line-structure DP; order of requests is ignored."""
    violation = validate_pair(inst, seq)
    if violation is not None:
        raise ValidationError(violation)
    if len(seq) == 0:
        return Fraction(0)
    servers, requests, scale = _scaled_problem(inst, seq)
    return Fraction(_dp_cost_scaled(servers, list(inst.capacities), requests), scale)


def lexmin_assignment(inst: Instance, seq: RequestSequence) -> OptResult:
    """The lexicographically smallest optimal assignment vector.

    Fixes requests in input order to the smallest server index that still
    admits an optimal completion (checked with the DP).  Intended for
    reporting; costs n*k DP solves, so keep instances moderate.
    """
    violation = validate_pair(inst, seq)
    if violation is not None:
        raise ValidationError(violation)
    n = len(seq)
    if n == 0:
        return OptResult(cost=Fraction(0), assignment=())
    servers, requests, scale = _scaled_problem(inst, seq)
    caps = list(inst.capacities)
    target = _dp_cost_scaled(servers, caps, requests)
    assignment: list[int] = []
    acc = 0
    for t in range(n):
        rest = requests[t + 1 :]
        for j in range(inst.k):
            if caps[j] == 0:
                continue
            step = abs(requests[t] - servers[j])
            caps[j] -= 1
            try:
                remainder = _dp_cost_scaled(servers, caps, rest)
            except ValidationError:
                caps[j] += 1
                continue
            if acc + step + remainder == target:
                acc += step
                assignment.append(j)
                break
            caps[j] += 1
        else:
            raise AssertionError("no feasible continuation at optimal cost")
    return OptResult(cost=Fraction(target, scale), assignment=tuple(assignment))
