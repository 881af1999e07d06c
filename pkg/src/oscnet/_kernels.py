"""Event-loop kernels.

Everything here works on flat numpy arrays so it can be compiled by numba;
see :mod:`oscnet._accel` for the pure-Python switch.
"""

import numpy as np

from ._accel import jit

# advance() exit codes
DONE = 0
HEAP_FULL = 1
LOG_FULL = 2
CAUSALITY = 3
EVENT_BUDGET = 4

# layout of the int64 counters array
C_HEAP = 0
C_SEQ = 1
C_PROCESSED = 2
C_TICKS = 3
C_DELIVERED = 4
C_GENERATED = 5
C_DROPPED = 6
C_FLIPS = 7
C_SAME_T = 8
C_LOG = 9
N_COUNTERS = 10

# log modes
LOG_OFF = 0
LOG_EMISSIONS = 1
LOG_ALL = 2


@jit
def heap_push(h_time, h_seq, h_node, h_port, counters, t, seq, node, port):
    k = counters[C_HEAP]
    counters[C_HEAP] = k + 1
    while k > 0:
        parent = (k - 1) >> 1
        pt = h_time[parent]
        if pt < t or (pt == t and h_seq[parent] < seq):
            break
        h_time[k] = pt
        h_seq[k] = h_seq[parent]
        h_node[k] = h_node[parent]
        h_port[k] = h_port[parent]
        k = parent
    h_time[k] = t
    h_seq[k] = seq
    h_node[k] = node
    h_port[k] = port


@jit
def heap_pop(h_time, h_seq, h_node, h_port, counters):
    """Remove the root; the caller reads it before calling."""
    n = counters[C_HEAP] - 1
    counters[C_HEAP] = n
    if n == 0:
        return
    t = h_time[n]
    seq = h_seq[n]
    node = h_node[n]
    port = h_port[n]
    k = 0
    while True:
        c = 2 * k + 1
        if c >= n:
            break
        if c + 1 < n:
            ct = h_time[c + 1]
            if ct < h_time[c] or (ct == h_time[c] and h_seq[c + 1] < h_seq[c]):
                c += 1
        ct = h_time[c]
        if t < ct or (t == ct and seq < h_seq[c]):
            break
        h_time[k] = ct
        h_seq[k] = h_seq[c]
        h_node[k] = h_node[c]
        h_port[k] = h_port[c]
        k = c
    h_time[k] = t
    h_seq[k] = seq
    h_node[k] = node
    h_port[k] = port


@jit
def clause_step(aux, o, i):
    """Break-only SAT clause node.

    aux[o:o+9] = fulfilling value per position (3), last advertised value
    per position (3, 0 = unknown), break counters (3).  Returns the output
    port: 1..3 = flip position k, 4..6 = break position k, 0 = nothing.
    """
    if i == 0:
        nful = 0
        j = 0
        for k in range(3):
            if aux[o + 3 + k] == aux[o + k]:
                nful += 1
                j = k
        r = 0
        if nful == 0:
            best = 0
            for k in range(1, 3):
                if aux[o + 6 + k] < aux[o + 6 + best]:
                    best = k
            r = best + 1
        elif nful == 1:
            r = j + 4
        aux[o + 6] = 0
        aux[o + 7] = 0
        aux[o + 8] = 0
        return r
    if i <= 6:
        aux[o + 3 + (i - 1) // 2] = (i - 1) % 2 + 1
    else:
        aux[o + 6 + i - 7] += 1
    return 0


@jit
def vertex_step(state, aux, v, o, i):
    """Graph-coloring vertex node.

    aux[o] = k, aux[o+1] = heuristic flag, aux[o+2] = 1 to toggle the flag on
    every tick (0: only on conflicting ticks), aux[o+3:o+3+k] = counters.
    """
    k = aux[o]
    if i > 0:
        aux[o + 2 + i] += 1
        return 0
    col = state[v]
    new = col
    conflict = aux[o + 2 + col] > 0
    if conflict:
        if aux[o + 1] == 1:
            best = -1
            bestc = 0
            for c in range(1, k + 1):
                if c != col and (best < 0 or aux[o + 2 + c] < bestc):
                    best = c
                    bestc = aux[o + 2 + c]
            new = best
        else:
            new = col % k + 1
    for c in range(1, k + 1):
        aux[o + 2 + c] = 0
    if conflict or aux[o + 2] == 1:
        aux[o + 1] = 1 - aux[o + 1]
    state[v] = new
    return new


@jit
def node_step(v, i, kind, spec_id, tab_off, tab_q, f_tab, g_tab, aux_off,
              state, aux):
    """Apply one delivered event; returns the output port (0 = dummy)."""
    kd = kind[v]
    if kd == 0:
        sid = spec_id[v]
        s = state[v]
        idx = tab_off[sid] + i * tab_q[sid] + s - 1
        r = g_tab[idx]
        state[v] = f_tab[idx]
        return r
    if kd == 1:
        return clause_step(aux, aux_off[v], i)
    return vertex_step(state, aux, v, aux_off[v], i)


@jit
def advance(t_end, max_events, loop_bound,
            kind, spec_id, tab_off, tab_q, f_tab, g_tab, aux_off,
            out_base, route_ptr, rt_node, rt_port, max_fanout,
            freq, phase, delay_scale, flip_mask, log_mask, log_mode,
            state, last_emit, aux, tick_count,
            h_time, h_seq, h_node, h_port, counters, t_last,
            l_time, l_node, l_in, l_out,
            lossy, loss_prob, rng):
    """Process events in (time, seq) order until the next one is past t_end.

    Returns one of the exit codes above; the caller grows buffers on
    HEAP_FULL / LOG_FULL and calls again.
    """
    cap = h_time.shape[0]
    lcap = l_time.shape[0]
    done = 0
    while counters[C_HEAP] > 0:
        t = h_time[0]
        if t > t_end:
            return DONE
        if done >= max_events:
            return EVENT_BUDGET
        if counters[C_HEAP] + max_fanout + 1 > cap:
            return HEAP_FULL
        if log_mode != 0 and counters[C_LOG] >= lcap:
            return LOG_FULL
        if t == t_last[0]:
            counters[C_SAME_T] += 1
            if counters[C_SAME_T] > loop_bound:
                return CAUSALITY
        else:
            counters[C_SAME_T] = 0
            t_last[0] = t
        v = h_node[0]
        i = h_port[0]
        heap_pop(h_time, h_seq, h_node, h_port, counters)
        done += 1
        counters[C_PROCESSED] += 1
        if i == 0:
            counters[C_TICKS] += 1
            kk = tick_count[v] + 1
            tick_count[v] = kk
            seq = counters[C_SEQ]
            counters[C_SEQ] = seq + 1
            heap_push(h_time, h_seq, h_node, h_port, counters,
                      (phase[v] + kk) / freq[v], seq, v, 0)
        else:
            counters[C_DELIVERED] += 1
        s_old = state[v]
        r = node_step(v, i, kind, spec_id, tab_off, tab_q, f_tab, g_tab,
                      aux_off, state, aux)
        if flip_mask[v] != 0 and state[v] != s_old:
            counters[C_FLIPS] += 1
        if log_mode == LOG_ALL or (log_mode == LOG_EMISSIONS and r > 0 and log_mask[v] != 0):
            n = counters[C_LOG]
            l_time[n] = t
            l_node[n] = v
            l_in[n] = i
            l_out[n] = r
            counters[C_LOG] = n + 1
        if r > 0:
            last_emit[v] = r
            b = out_base[v] + r
            for e in range(route_ptr[b], route_ptr[b + 1]):
                tgt = rt_node[e]
                counters[C_GENERATED] += 1
                td = t
                if lossy != 0:
                    if rng.random() < loss_prob:
                        counters[C_DROPPED] += 1
                        continue
                    td = t + rng.random() * delay_scale[tgt]
                seq = counters[C_SEQ]
                counters[C_SEQ] = seq + 1
                heap_push(h_time, h_seq, h_node, h_port, counters,
                          td, seq, tgt, rt_port[e])
    return DONE
