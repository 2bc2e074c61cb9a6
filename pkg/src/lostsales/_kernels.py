"""Numba kernels for inventory projection and long simulation loops.

Two exact projection engines live here.

* Customer-count recursion for Mixed-Erlang demand: stock is counted in
  fully servable customers, which is Poisson given the physical quantities.
  Arrays of size B hold the in-band pmf; all mass at or above B is lumped
  into an implied overflow bucket (1 - sum of the array).  States in that
  bucket can never stock out within the projection window provided
  B >= (window + 1) * k_max, so expected lost sales are exact.

* Offset-lattice recursion for integer-valued demand: the on-hand
  distribution is a union of shifted integer lattices (one "group" per
  distinct fractional offset, at most lead_time + 1 of them) plus an atom
  at zero.  Demand convolution and pipeline arrivals preserve this shape,
  so the propagation is exact up to the demand pmf truncation.

Simulation kernels run whole replication-by-period grids and return per
replication aggregates; trace variants fill per-period arrays instead.
Aggregate columns: cost, lost, end inventory, order, order^2 sums over the
post-warmup window, then the minimum PIL slack min(U - projection).
"""

import math

import numpy as np
from numba import njit

AGG_COLS = 6  # cost, lost, end_inv, order, order_sq, min_slack


@njit(cache=True)
def _poisson_pmf_into(m, out):
    """Fill ``out`` with the Poisson(m) pmf on 0..B-1; tail mass is implied."""
    b = out.shape[0]
    if m <= 0.0:
        for x in range(b):
            out[x] = 0.0
        out[0] = 1.0
        return
    p = math.exp(-m)
    for x in range(b):
        if x > 0:
            p *= m / x
        out[x] = p


@njit(cache=True)
def _poisson_pmf_len(m, out):
    """Like _poisson_pmf_into but returns the effective support length."""
    b = out.shape[0]
    if m <= 0.0:
        out[0] = 1.0
        return 1
    p = math.exp(-m)
    cum = 0.0
    n = b
    for x in range(b):
        if x > 0:
            p *= m / x
        out[x] = p
        cum += p
        if cum >= 1.0 - 1e-15 and x >= m:
            n = x + 1
            break
    return n


@njit(cache=True)
def me_el_profile(on_hand, pipe, lam, theta, elk, el_out, cur, nxt, pq, want_jt):
    """Expected lost customers per period over the projection window.

    el_out[j] receives E[(K - I~_j)^+ | state] for j = 0..len(el_out)-1.
    When want_jt is set the recursion runs one subtraction further and
    leaves the pmf of end-of-window servable customers in ``cur`` (index 0
    contains the stockout atom).
    """
    b = cur.shape[0]
    kmax = theta.shape[0] - 1
    steps = el_out.shape[0]
    _poisson_pmf_into(lam * on_hand, cur)
    for j in range(steps):
        s = 0.0
        top = kmax if kmax < b else b
        for x in range(top):
            s += cur[x] * elk[x]
        el_out[j] = s
        last = j == steps - 1
        if last and not want_jt:
            return
        # servable customers left after this period's arrivals are served
        jt0 = 0.0
        cum = 0.0
        for k in range(kmax + 1):
            if theta[k] > 0.0:
                c = 0.0
                hi = k if k < b - 1 else b - 1
                for x in range(hi + 1):
                    c += cur[x]
                jt0 += theta[k] * c
        for y in range(b):
            nxt[y] = 0.0
        nxt[0] = jt0
        for y in range(1, b):
            acc = 0.0
            for k in range(kmax + 1):
                idx = y + k
                if idx < b:
                    acc += theta[k] * cur[idx]
            nxt[y] = acc
        if last:
            for y in range(b):
                cur[y] = nxt[y]
            return
        # next period's arriving order adds Poisson(lam * q) servable customers
        qlen = _poisson_pmf_len(lam * pipe[j], pq)
        for x in range(b):
            cur[x] = 0.0
        for y in range(b):
            w = nxt[y]
            if w > 0.0:
                top2 = qlen if y + qlen <= b else b - y
                for dx in range(top2):
                    cur[y + dx] += w * pq[dx]


@njit(cache=True)
def me_extra_loss(jt, lam_q, pq, elk, b):
    """E[(K - (J~ + Q))^+] with Q ~ Poisson(lam_q), given the J~ pmf."""
    kmax = elk.shape[0]
    qlen = _poisson_pmf_len(lam_q, pq)
    s = 0.0
    for y in range(b):
        w = jt[y]
        if w > 0.0 and y < kmax:
            top = qlen if y + qlen <= kmax else kmax - y
            for dx in range(top):
                s += w * pq[dx] * elk[y + dx]
    return s


@njit(cache=True)
def lattice_el_profile(on_hand, pipe, pmf, st, sp, el_out, anchors, probs, glen, want_jt):
    """Expected lost sales per period for integer-valued demand.

    Propagates the exact on-hand distribution as offset groups plus a zero
    atom.  Returns the final zero-atom mass; when want_jt is set the group
    arrays are left holding the end-of-window distribution of J.
    """
    m_max = pmf.shape[0] - 1
    size_l = probs.shape[1]
    steps = el_out.shape[0]
    # the in-place convolution below requires zeros beyond each group's length
    for g in range(probs.shape[0]):
        glen[g] = 0
        for m in range(size_l):
            probs[g, m] = 0.0
    ng = 0
    zero = 0.0
    if on_hand > 0.0:
        anchors[0] = on_hand
        probs[0, 0] = 1.0
        glen[0] = 1
        ng = 1
    else:
        zero = 1.0
    for j in range(steps):
        # expected lost sales before serving this period's demand
        s = zero * st[0]
        for g in range(ng):
            a = anchors[g]
            fa = int(math.floor(a))
            for m in range(glen[g]):
                c = fa + 1 - m
                if c < 0:
                    c = 0
                if c > m_max + 1:
                    c = m_max + 1
                s += probs[g, m] * (st[c] - (a - m) * sp[c])
        el_out[j] = s
        last = j == steps - 1
        if last and not want_jt:
            return zero
        # subtract demand, clipping at zero
        for g in range(ng):
            a = anchors[g]
            ai = int(math.floor(a + 1e-9))
            if abs(a - ai) < 1e-9:
                keep = ai  # integer anchor: value 0 belongs to the atom
            else:
                keep = int(math.floor(a)) + 1
            n = glen[g]
            gmass = 0.0
            for m in range(n):
                gmass += probs[g, m]
            kmass = 0.0
            hi = keep if keep < n + m_max + 1 else n + m_max + 1
            if hi > size_l:
                raise ValueError("lattice projection support exceeded its buffer")
            for m2 in range(hi - 1, -1, -1):
                acc = 0.0
                dlo = m2 - (n - 1) if m2 - (n - 1) > 0 else 0
                dhi = m2 if m2 < m_max else m_max
                for d in range(dlo, dhi + 1):
                    acc += probs[g, m2 - d] * pmf[d]
                probs[g, m2] = acc
                kmass += acc
            for m2 in range(hi, n):
                probs[g, m2] = 0.0
            glen[g] = hi
            zero += gmass - kmass
        if last:
            return zero
        # receive the next outstanding order
        qn = pipe[j]
        for g in range(ng):
            anchors[g] += qn
        if qn > 0.0 and zero > 0.0:
            anchors[ng] = qn
            probs[ng, 0] = zero
            glen[ng] = 1
            ng += 1
            zero = 0.0
    return zero


@njit(cache=True)
def _lattice_loss_at(q, zero, anchors, probs, glen, ng, st, sp, m_max):
    """E[(D - (J + q))^+] over the propagated J distribution."""
    c0 = int(math.floor(q)) + 1
    if c0 < 0:
        c0 = 0
    if c0 > m_max + 1:
        c0 = m_max + 1
    s = zero * (st[c0] - q * sp[c0])
    for g in range(ng):
        a = anchors[g] + q
        fa = int(math.floor(a))
        for m in range(glen[g]):
            c = fa + 1 - m
            if c < 0:
                c = 0
            if c > m_max + 1:
                c = m_max + 1
            s += probs[g, m] * (st[c] - (a - m) * sp[c])
    return s


@njit(cache=True)
def _myopic_objective(q, zero, anchors, probs, glen, ng, st, sp, m_max, ej, mu, h, p):
    return h * (ej + q - mu) + (h + p) * _lattice_loss_at(
        q, zero, anchors, probs, glen, ng, st, sp, m_max
    )


@njit(cache=True)
def myopic_order_lattice(zero, anchors, probs, glen, ng, st, sp, m_max, mu, h, p, qhi, tol):
    """Minimizer of next-arrival-period expected cost over the order q.

    Golden-section search on [0, qhi] followed by a left-edge bisection so
    that flat stretches resolve to the smallest minimizer.
    """
    ej = 0.0
    for g in range(ng):
        a = anchors[g]
        for m in range(glen[g]):
            ej += probs[g, m] * (a - m)
    inv_phi = 0.6180339887498949
    inv_phi2 = 0.3819660112501051
    a1 = 0.0
    b1 = qhi
    dist = b1 - a1
    c = a1 + inv_phi2 * dist
    d = a1 + inv_phi * dist
    yc = _myopic_objective(c, zero, anchors, probs, glen, ng, st, sp, m_max, ej, mu, h, p)
    yd = _myopic_objective(d, zero, anchors, probs, glen, ng, st, sp, m_max, ej, mu, h, p)
    while dist > tol:
        if yc < yd:
            b1 = d
            d = c
            yd = yc
            dist = inv_phi * dist
            c = a1 + inv_phi2 * dist
            yc = _myopic_objective(c, zero, anchors, probs, glen, ng, st, sp, m_max, ej, mu, h, p)
        else:
            a1 = c
            c = d
            yc = yd
            dist = inv_phi * dist
            d = a1 + inv_phi * dist
            yd = _myopic_objective(d, zero, anchors, probs, glen, ng, st, sp, m_max, ej, mu, h, p)
    qm = 0.5 * (a1 + b1)
    ym = _myopic_objective(qm, zero, anchors, probs, glen, ng, st, sp, m_max, ej, mu, h, p)
    # slide to the left end of the optimal flat region
    thresh = ym + 1e-12 * (1.0 + abs(ym))
    lo = 0.0
    hi = qm
    ylo = _myopic_objective(lo, zero, anchors, probs, glen, ng, st, sp, m_max, ej, mu, h, p)
    if ylo <= thresh:
        return lo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        ymid = _myopic_objective(mid, zero, anchors, probs, glen, ng, st, sp, m_max, ej, mu, h, p)
        if ymid <= thresh:
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# full-horizon simulators
# ---------------------------------------------------------------------------


@njit(cache=True)
def sim_pil_me(demands, tau, level, lam, theta, elk, b, mu, h, p, warmup):
    reps, horizon = demands.shape
    agg = np.zeros((reps, AGG_COLS))
    el = np.zeros(tau)
    cur = np.zeros(b)
    nxt = np.zeros(b)
    pq = np.zeros(b)
    pipe = np.zeros(tau - 1) if tau > 1 else np.zeros(0)
    for rep in range(reps):
        on_hand = 0.0
        for k in range(tau - 1):
            pipe[k] = 0.0
        min_slack = np.inf
        cost_s = 0.0
        lost_s = 0.0
        inv_s = 0.0
        ord_s = 0.0
        ord2_s = 0.0
        for t in range(horizon):
            me_el_profile(on_hand, pipe, lam, theta, elk, el, cur, nxt, pq, False)
            psum = 0.0
            for k in range(tau - 1):
                psum += pipe[k]
            els = 0.0
            for j in range(tau):
                els += el[j]
            proj = on_hand + psum - tau * mu + els / lam
            slack = level - proj
            if slack < min_slack:
                min_slack = slack
            order = slack if slack > 0.0 else 0.0
            d = demands[rep, t]
            lost = d - on_hand
            if lost < 0.0:
                lost = 0.0
            end_inv = on_hand - d
            if end_inv < 0.0:
                end_inv = 0.0
            if tau > 1:
                arriving = pipe[0]
                for k in range(tau - 2):
                    pipe[k] = pipe[k + 1]
                pipe[tau - 2] = order
            else:
                arriving = order
            on_hand = end_inv + arriving
            if t >= warmup:
                cost_s += h * end_inv + p * lost
                lost_s += lost
                inv_s += end_inv
                ord_s += order
                ord2_s += order * order
        agg[rep, 0] = cost_s
        agg[rep, 1] = lost_s
        agg[rep, 2] = inv_s
        agg[rep, 3] = ord_s
        agg[rep, 4] = ord2_s
        agg[rep, 5] = min_slack
    return agg


@njit(cache=True)
def sim_pil_me_trace(demands, tau, level, lam, theta, elk, b, mu, h, p, orders, lost, cost, proj):
    reps, horizon = demands.shape
    el = np.zeros(tau)
    cur = np.zeros(b)
    nxt = np.zeros(b)
    pq = np.zeros(b)
    pipe = np.zeros(tau - 1) if tau > 1 else np.zeros(0)
    for rep in range(reps):
        on_hand = 0.0
        for k in range(tau - 1):
            pipe[k] = 0.0
        for t in range(horizon):
            me_el_profile(on_hand, pipe, lam, theta, elk, el, cur, nxt, pq, False)
            psum = 0.0
            for k in range(tau - 1):
                psum += pipe[k]
            els = 0.0
            for j in range(tau):
                els += el[j]
            pr = on_hand + psum - tau * mu + els / lam
            order = level - pr if level > pr else 0.0
            d = demands[rep, t]
            lo = d - on_hand
            if lo < 0.0:
                lo = 0.0
            end_inv = on_hand - d
            if end_inv < 0.0:
                end_inv = 0.0
            if tau > 1:
                arriving = pipe[0]
                for k in range(tau - 2):
                    pipe[k] = pipe[k + 1]
                pipe[tau - 2] = order
            else:
                arriving = order
            on_hand = end_inv + arriving
            orders[rep, t] = order
            lost[rep, t] = lo
            cost[rep, t] = h * end_inv + p * lo
            proj[rep, t] = pr
    return 0


@njit(cache=True)
def sim_pil_lattice(demands, tau, level, pmf, st, sp, size_l, mu, h, p, warmup):
    reps, horizon = demands.shape
    agg = np.zeros((reps, AGG_COLS))
    el = np.zeros(tau)
    anchors = np.zeros(tau + 1)
    probs = np.zeros((tau + 1, size_l))
    glen = np.zeros(tau + 1, dtype=np.int64)
    pipe = np.zeros(tau - 1) if tau > 1 else np.zeros(0)
    for rep in range(reps):
        on_hand = 0.0
        for k in range(tau - 1):
            pipe[k] = 0.0
        min_slack = np.inf
        cost_s = 0.0
        lost_s = 0.0
        inv_s = 0.0
        ord_s = 0.0
        ord2_s = 0.0
        for t in range(horizon):
            lattice_el_profile(on_hand, pipe, pmf, st, sp, el, anchors, probs, glen, False)
            psum = 0.0
            for k in range(tau - 1):
                psum += pipe[k]
            els = 0.0
            for j in range(tau):
                els += el[j]
            proj = on_hand + psum - tau * mu + els
            slack = level - proj
            if slack < min_slack:
                min_slack = slack
            order = slack if slack > 0.0 else 0.0
            d = demands[rep, t]
            lost = d - on_hand
            if lost < 0.0:
                lost = 0.0
            end_inv = on_hand - d
            if end_inv < 0.0:
                end_inv = 0.0
            if tau > 1:
                arriving = pipe[0]
                for k in range(tau - 2):
                    pipe[k] = pipe[k + 1]
                pipe[tau - 2] = order
            else:
                arriving = order
            on_hand = end_inv + arriving
            if t >= warmup:
                cost_s += h * end_inv + p * lost
                lost_s += lost
                inv_s += end_inv
                ord_s += order
                ord2_s += order * order
        agg[rep, 0] = cost_s
        agg[rep, 1] = lost_s
        agg[rep, 2] = inv_s
        agg[rep, 3] = ord_s
        agg[rep, 4] = ord2_s
        agg[rep, 5] = min_slack
    return agg


@njit(cache=True)
def sim_pil_lattice_trace(demands, tau, level, pmf, st, sp, size_l, mu, h, p, orders, lost, cost, proj):
    reps, horizon = demands.shape
    el = np.zeros(tau)
    anchors = np.zeros(tau + 1)
    probs = np.zeros((tau + 1, size_l))
    glen = np.zeros(tau + 1, dtype=np.int64)
    pipe = np.zeros(tau - 1) if tau > 1 else np.zeros(0)
    for rep in range(reps):
        on_hand = 0.0
        for k in range(tau - 1):
            pipe[k] = 0.0
        for t in range(horizon):
            lattice_el_profile(on_hand, pipe, pmf, st, sp, el, anchors, probs, glen, False)
            psum = 0.0
            for k in range(tau - 1):
                psum += pipe[k]
            els = 0.0
            for j in range(tau):
                els += el[j]
            pr = on_hand + psum - tau * mu + els
            order = level - pr if level > pr else 0.0
            d = demands[rep, t]
            lo = d - on_hand
            if lo < 0.0:
                lo = 0.0
            end_inv = on_hand - d
            if end_inv < 0.0:
                end_inv = 0.0
            if tau > 1:
                arriving = pipe[0]
                for k in range(tau - 2):
                    pipe[k] = pipe[k + 1]
                pipe[tau - 2] = order
            else:
                arriving = order
            on_hand = end_inv + arriving
            orders[rep, t] = order
            lost[rep, t] = lo
            cost[rep, t] = h * end_inv + p * lo
            proj[rep, t] = pr
    return 0


@njit(cache=True)
def sim_myopic_lattice(demands, tau, pmf, st, sp, size_l, mu, h, p, qhi, tol, warmup):
    reps, horizon = demands.shape
    agg = np.zeros((reps, AGG_COLS))
    el = np.zeros(tau)
    anchors = np.zeros(tau + 1)
    probs = np.zeros((tau + 1, size_l))
    glen = np.zeros(tau + 1, dtype=np.int64)
    m_max = pmf.shape[0] - 1
    pipe = np.zeros(tau - 1) if tau > 1 else np.zeros(0)
    for rep in range(reps):
        on_hand = 0.0
        for k in range(tau - 1):
            pipe[k] = 0.0
        cost_s = 0.0
        lost_s = 0.0
        inv_s = 0.0
        ord_s = 0.0
        ord2_s = 0.0
        for t in range(horizon):
            zero = lattice_el_profile(on_hand, pipe, pmf, st, sp, el, anchors, probs, glen, True)
            ng = 0
            for g in range(tau + 1):
                if glen[g] > 0:
                    ng = g + 1
            order = myopic_order_lattice(
                zero, anchors, probs, glen, ng, st, sp, m_max, mu, h, p, qhi, tol
            )
            d = demands[rep, t]
            lost = d - on_hand
            if lost < 0.0:
                lost = 0.0
            end_inv = on_hand - d
            if end_inv < 0.0:
                end_inv = 0.0
            if tau > 1:
                arriving = pipe[0]
                for k in range(tau - 2):
                    pipe[k] = pipe[k + 1]
                pipe[tau - 2] = order
            else:
                arriving = order
            on_hand = end_inv + arriving
            if t >= warmup:
                cost_s += h * end_inv + p * lost
                lost_s += lost
                inv_s += end_inv
                ord_s += order
                ord2_s += order * order
        agg[rep, 0] = cost_s
        agg[rep, 1] = lost_s
        agg[rep, 2] = inv_s
        agg[rep, 3] = ord_s
        agg[rep, 4] = ord2_s
        agg[rep, 5] = np.inf
    return agg


@njit(cache=True)
def sim_position_policy(demands, tau, mode, base, cap, h, p, warmup):
    """Base-stock (mode 0), constant order (mode 1), capped base-stock (mode 2)."""
    reps, horizon = demands.shape
    agg = np.zeros((reps, AGG_COLS))
    pipe = np.zeros(tau - 1) if tau > 1 else np.zeros(0)
    for rep in range(reps):
        on_hand = 0.0
        for k in range(tau - 1):
            pipe[k] = 0.0
        cost_s = 0.0
        lost_s = 0.0
        inv_s = 0.0
        ord_s = 0.0
        ord2_s = 0.0
        for t in range(horizon):
            psum = 0.0
            for k in range(tau - 1):
                psum += pipe[k]
            if mode == 1:
                order = cap
            else:
                order = base - on_hand - psum
                if order < 0.0:
                    order = 0.0
                if mode == 2 and order > cap:
                    order = cap
            d = demands[rep, t]
            lost = d - on_hand
            if lost < 0.0:
                lost = 0.0
            end_inv = on_hand - d
            if end_inv < 0.0:
                end_inv = 0.0
            if tau > 1:
                arriving = pipe[0]
                for k in range(tau - 2):
                    pipe[k] = pipe[k + 1]
                pipe[tau - 2] = order
            else:
                arriving = order
            on_hand = end_inv + arriving
            if t >= warmup:
                cost_s += h * end_inv + p * lost
                lost_s += lost
                inv_s += end_inv
                ord_s += order
                ord2_s += order * order
        agg[rep, 0] = cost_s
        agg[rep, 1] = lost_s
        agg[rep, 2] = inv_s
        agg[rep, 3] = ord_s
        agg[rep, 4] = ord2_s
        agg[rep, 5] = np.inf
    return agg


@njit(cache=True)
def sim_backorder_basestock(demands, tau, base, h, p, warmup):
    """Back-order twin under a base-stock policy; net inventory may go negative.

    Aggregate columns: cost, backorders, end inventory, order, net inventory
    at the start of the period (after receipt), all summed past warmup; the
    last column counts included periods.
    """
    reps, horizon = demands.shape
    agg = np.zeros((reps, AGG_COLS))
    pipe = np.zeros(tau - 1) if tau > 1 else np.zeros(0)
    for rep in range(reps):
        net = 0.0
        for k in range(tau - 1):
            pipe[k] = 0.0
        cost_s = 0.0
        back_s = 0.0
        inv_s = 0.0
        ord_s = 0.0
        start_s = 0.0
        n = 0.0
        for t in range(horizon):
            psum = 0.0
            for k in range(tau - 1):
                psum += pipe[k]
            order = base - net - psum
            if order < 0.0:
                order = 0.0
            d = demands[rep, t]
            if t >= warmup:
                start_s += net
            backord = d - net
            if backord < 0.0:
                backord = 0.0
            end_inv = net - d
            if end_inv < 0.0:
                end_inv = 0.0
            if tau > 1:
                arriving = pipe[0]
                for k in range(tau - 2):
                    pipe[k] = pipe[k + 1]
                pipe[tau - 2] = order
            else:
                arriving = order
            net = net - d + arriving
            if t >= warmup:
                cost_s += h * end_inv + p * backord
                back_s += backord
                inv_s += end_inv
                ord_s += order
                n += 1.0
        agg[rep, 0] = cost_s
        agg[rep, 1] = back_s
        agg[rep, 2] = inv_s
        agg[rep, 3] = ord_s
        agg[rep, 4] = start_s
        agg[rep, 5] = n
    return agg


@njit(cache=True)
def sim_backorder_basestock_trace(demands, tau, base, h, p, backorders, cost):
    reps, horizon = demands.shape
    pipe = np.zeros(tau - 1) if tau > 1 else np.zeros(0)
    for rep in range(reps):
        net = 0.0
        for k in range(tau - 1):
            pipe[k] = 0.0
        for t in range(horizon):
            psum = 0.0
            for k in range(tau - 1):
                psum += pipe[k]
            order = base - net - psum
            if order < 0.0:
                order = 0.0
            d = demands[rep, t]
            backord = d - net
            if backord < 0.0:
                backord = 0.0
            end_inv = net - d
            if end_inv < 0.0:
                end_inv = 0.0
            if tau > 1:
                arriving = pipe[0]
                for k in range(tau - 2):
                    pipe[k] = pipe[k + 1]
                pipe[tau - 2] = order
            else:
                arriving = order
            net = net - d + arriving
            backorders[rep, t] = backord
            cost[rep, t] = h * end_inv + p * backord
    return 0


@njit(cache=True)
def me_projection_benchmark(state_inv, state_pipe, lam, theta, elk, b, rounds):
    """Tight projection loop used by the throughput probe."""
    n, width = state_pipe.shape
    tau = width + 1
    el = np.zeros(tau)
    cur = np.zeros(b)
    nxt = np.zeros(b)
    pq = np.zeros(b)
    acc = 0.0
    for _ in range(rounds):
        for i in range(n):
            me_el_profile(state_inv[i], state_pipe[i], lam, theta, elk, el, cur, nxt, pq, False)
            for j in range(tau):
                acc += el[j]
    return acc


@njit(cache=True)
def sim_position_policy_cost_trace(demands, tau, mode, base, cap, h, p, cost):
    """Per-period cost trace for the pipeline-position policies."""
    reps, horizon = demands.shape
    pipe = np.zeros(tau - 1) if tau > 1 else np.zeros(0)
    for rep in range(reps):
        on_hand = 0.0
        for k in range(tau - 1):
            pipe[k] = 0.0
        for t in range(horizon):
            psum = 0.0
            for k in range(tau - 1):
                psum += pipe[k]
            if mode == 1:
                order = cap
            else:
                order = base - on_hand - psum
                if order < 0.0:
                    order = 0.0
                if mode == 2 and order > cap:
                    order = cap
            d = demands[rep, t]
            lost = d - on_hand
            if lost < 0.0:
                lost = 0.0
            end_inv = on_hand - d
            if end_inv < 0.0:
                end_inv = 0.0
            if tau > 1:
                arriving = pipe[0]
                for k in range(tau - 2):
                    pipe[k] = pipe[k + 1]
                pipe[tau - 2] = order
            else:
                arriving = order
            on_hand = end_inv + arriving
            cost[rep, t] = h * end_inv + p * lost
    return 0
