# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled annealing kernel.

Mirrors ``_pykernel.PyKernel`` operation for operation, so both backends
produce bit-identical trajectories from the same uniforms.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sqrt, pow
from libc.string cimport memcpy

cnp.import_array()

DEF M2 = 0
DEF M3 = 1
DEF ONED = 2

DEF NEGDMIN = 0
DEF PHI = 1
DEF PSI = 2
DEF PSI_SUB = 3

ctypedef cnp.int64_t i64


cdef inline i64 _pick(double u, i64 count) noexcept nogil:
    cdef i64 r = <i64>(u * count)
    if r >= count:
        r = count - 1
    return r


def _pad_kernel(ktab, maxd):
    # kpad[maxd + g] = K(|g|) for g in [-maxd, maxd]
    k = np.zeros(maxd + 1)
    src = np.asarray(ktab, dtype=np.float64)[:maxd + 1]
    k[:len(src)] = src
    return np.ascontiguousarray(np.concatenate([k[::-1], k[1:]]))


cdef class CKernel:
    cdef public i64 n, k, maxd, npairs, window, subsample
    cdef public int mutation, evalkind
    cdef public double p, inv_p, sumf, e_cur, sub_scale
    cdef public i64 dmin, dmax, best_dmin
    cdef public i64 iterations, accepted, worse, worse_accepted
    cdef public double worse_de_sum
    cdef i64[:, ::1] coords, pos, dsq, best
    cdef i64[::1] cnt, pi, pj, crit, nbr_j, nbr_d, m3_dims, scratch_old, scratch_new
    cdef i64[::1] refs, refd
    cdef double[::1] ftab, ktab, kpad, S, S_saved

    def __init__(self, coords, int mutation, int evalkind, double p,
                 ftab, ktab, i64 window, i64 subsample):
        coords = np.ascontiguousarray(coords, dtype=np.int64)
        self.n = coords.shape[0]
        self.k = coords.shape[1]
        self.maxd = self.k * (self.n - 1) * (self.n - 1)
        self.npairs = self.n * (self.n - 1) // 2
        self.mutation = mutation
        self.evalkind = evalkind
        self.p = p
        self.inv_p = 1.0 / p
        self.window = window
        self.subsample = subsample
        self.sub_scale = (<double>self.npairs) / subsample if subsample > 0 else 0.0
        self.coords = coords.copy()
        self.best = coords.copy()
        self.ftab = np.ascontiguousarray(ftab, dtype=np.float64)
        self.ktab = np.ascontiguousarray(ktab, dtype=np.float64)
        self.kpad = _pad_kernel(ktab, self.maxd)
        iu, ju = np.triu_indices(self.n, 1)
        self.pi = iu.astype(np.int64)
        self.pj = ju.astype(np.int64)
        self.crit = np.zeros(self.npairs, dtype=np.int64)
        self.nbr_j = np.zeros(2 * self.k, dtype=np.int64)
        self.nbr_d = np.zeros(2 * self.k, dtype=np.int64)
        self.m3_dims = np.zeros(self.k, dtype=np.int64)
        self.scratch_old = np.zeros(2 * self.n, dtype=np.int64)
        self.scratch_new = np.zeros(2 * self.n, dtype=np.int64)
        self.refs = np.zeros(max(subsample, 1), dtype=np.int64)
        self.refd = np.zeros(max(subsample, 1), dtype=np.int64)
        pos = np.zeros((self.k, self.n), dtype=np.int64)
        for d in range(self.k):
            pos[d, coords[:, d]] = np.arange(self.n)
        self.pos = pos
        diff = coords[:, None, :] - coords[None, :, :]
        self.dsq = np.ascontiguousarray(np.einsum("abk,abk->ab", diff, diff), dtype=np.int64)
        self.cnt = np.zeros(self.maxd + 1, dtype=np.int64)
        self.S = np.zeros(self.maxd + 1, dtype=np.float64)
        self.S_saved = np.zeros(self.maxd + 1, dtype=np.float64)
        cdef i64 r
        for r in range(self.npairs):
            self.cnt[self.dsq[self.pi[r], self.pj[r]]] += 1
        self.dmin = 0
        while self.cnt[self.dmin] == 0:
            self.dmin += 1
        self.dmax = self.maxd
        while self.cnt[self.dmax] == 0:
            self.dmax -= 1
        self.best_dmin = self.dmin
        self.iterations = 0
        self.accepted = 0
        self.worse = 0
        self.worse_accepted = 0
        self.worse_de_sum = 0.0
        self.resync()

    # -- bookkeeping ---------------------------------------------------------

    cpdef resync(self):
        """Recompute the floating-point accumulators from the integer state."""
        cdef i64 u, v, lo, hi
        cdef double c
        cdef double* S = &self.S[0]
        cdef double* ku
        self.sumf = 0.0
        if self.evalkind == PSI:
            for v in range(self.maxd + 1):
                S[v] = 0.0
        for u in range(self.dmin, self.dmax + 1):
            if self.cnt[u] == 0:
                continue
            c = <double>self.cnt[u]
            self.sumf += c * self.ftab[u]
            if self.evalkind == PSI:
                ku = &self.kpad[0] + (self.maxd - u)
                lo = max(u - self.window, 0)
                hi = min(u + self.window, self.maxd)
                for v in range(lo, hi + 1):
                    S[v] += c * ku[v]
        self.e_cur = self._energy()

    cdef inline void _s_move(self, i64 old, i64 new) noexcept nogil:
        # S[v] += K(v - new) - K(v - old) over the union of both windows
        cdef i64 v, lo, hi
        cdef double* S = &self.S[0]
        cdef double* kn = &self.kpad[0] + (self.maxd - new)
        cdef double* ko = &self.kpad[0] + (self.maxd - old)
        lo = min(old, new) - self.window
        if lo < 0:
            lo = 0
        hi = max(old, new) + self.window
        if hi > self.maxd:
            hi = self.maxd
        for v in range(lo, hi + 1):
            S[v] += kn[v] - ko[v]

    cdef void _touched_range(self, i64 i, i64 j, i64 d, i64* olo, i64* ohi) noexcept nogil:
        # value range of old and new distances the swap (i, j, d) touches
        cdef i64 a = self.coords[i, d]
        cdef i64 b = self.coords[j, d]
        cdef i64 l, c, old, new, lo = self.maxd + 1, hi = -1
        for l in range(self.n):
            if l == i or l == j:
                continue
            c = self.coords[l, d]
            old = self.dsq[i, l]
            new = old - (a - c) * (a - c) + (b - c) * (b - c)
            if old != new:
                lo = min(lo, min(old, new))
                hi = max(hi, max(old, new))
            old = self.dsq[j, l]
            new = old - (b - c) * (b - c) + (a - c) * (a - c)
            if old != new:
                lo = min(lo, min(old, new))
                hi = max(hi, max(old, new))
        olo[0] = max(lo - self.window, 0)
        ohi[0] = min(hi + self.window, self.maxd)

    cdef void _swap(self, i64 i, i64 j, i64 d, bint with_s) noexcept nogil:
        cdef i64 a = self.coords[i, d]
        cdef i64 b = self.coords[j, d]
        cdef i64 l, c, old, new, t, pt, oc, nc
        cdef i64 newmin = self.maxd + 1
        cdef i64 newmax = -1
        self.coords[i, d] = b
        self.coords[j, d] = a
        self.pos[d, a] = j
        self.pos[d, b] = i
        for l in range(self.n):
            if l == i or l == j:
                continue
            c = self.coords[l, d]
            for t in range(2):
                if t == 0:
                    pt = i
                    oc = a
                    nc = b
                else:
                    pt = j
                    oc = b
                    nc = a
                old = self.dsq[pt, l]
                new = old - (oc - c) * (oc - c) + (nc - c) * (nc - c)
                if new == old:
                    continue
                self.dsq[pt, l] = new
                self.dsq[l, pt] = new
                self.cnt[old] -= 1
                self.cnt[new] += 1
                if self.evalkind == PHI:
                    self.sumf -= self.ftab[old]
                    self.sumf += self.ftab[new]
                elif with_s and self.evalkind == PSI:
                    self._s_move(old, new)
                if new < newmin:
                    newmin = new
                if new > newmax:
                    newmax = new
        if newmin < self.dmin:
            self.dmin = newmin
        else:
            while self.cnt[self.dmin] == 0:
                self.dmin += 1
        if newmax > self.dmax:
            self.dmax = newmax
        else:
            while self.cnt[self.dmax] == 0:
                self.dmax -= 1

    cdef i64 _dmin_after(self, i64 i, i64 j, i64 d) noexcept nogil:
        cdef i64 a = self.coords[i, d]
        cdef i64 b = self.coords[j, d]
        cdef i64 l, c, old, new, t, pt, oc, nc, m = 0, res
        cdef i64 lo = self.maxd + 1
        for l in range(self.n):
            if l == i or l == j:
                continue
            c = self.coords[l, d]
            for t in range(2):
                if t == 0:
                    pt = i
                    oc = a
                    nc = b
                else:
                    pt = j
                    oc = b
                    nc = a
                old = self.dsq[pt, l]
                new = old - (oc - c) * (oc - c) + (nc - c) * (nc - c)
                self.cnt[old] -= 1
                self.cnt[new] += 1
                self.scratch_old[m] = old
                self.scratch_new[m] = new
                m += 1
                if new < lo:
                    lo = new
        if lo < self.dmin:
            res = lo
        else:
            res = self.dmin
            while self.cnt[res] == 0:
                res += 1
        for t in range(m):
            self.cnt[self.scratch_new[t]] -= 1
            self.cnt[self.scratch_old[t]] += 1
        return res

    cdef double _energy(self) noexcept nogil:
        cdef i64 v
        cdef double acc
        cdef i64* cp
        cdef double* fp
        cdef double* sp
        if self.evalkind == NEGDMIN:
            return -sqrt(<double>self.dmin)
        if self.evalkind == PHI:
            return pow(self.sumf, self.inv_p)
        if self.evalkind == PSI:
            acc = 0.0
            cp = &self.cnt[0]
            fp = &self.ftab[0]
            sp = &self.S[0]
            for v in range(self.dmin, self.dmax + 1):
                if cp[v] != 0:
                    acc += (<double>cp[v]) * fp[v] / sqrt(sp[v])
            return pow(acc, self.inv_p)
        return self._energy_sub()

    cdef double _energy_sub(self) noexcept nogil:
        cdef i64 v, t, g
        cdef double acc = 0.0, s
        for t in range(self.subsample):
            self.refd[t] = self.dsq[self.pi[self.refs[t]], self.pj[self.refs[t]]]
        for v in range(self.dmin, self.dmax + 1):
            if self.cnt[v] == 0:
                continue
            s = 0.0
            for t in range(self.subsample):
                g = self.refd[t] - v
                if g < 0:
                    g = -g
                s += self.ktab[g]
            s = s * self.sub_scale
            if s < 1.0:
                s = 1.0
            acc += (<double>self.cnt[v]) * self.ftab[v] / sqrt(s)
        return pow(acc, self.inv_p)

    # -- proposals -----------------------------------------------------------

    cdef void _propose(self, double* u, i64* oi, i64* oj, i64* od) noexcept nogil:
        cdef i64 r, ncrit = 0, i, j, d, c, nn = 0, best_s = -1, s, nd = 0
        for r in range(self.npairs):
            if self.dsq[self.pi[r], self.pj[r]] == self.dmin:
                self.crit[ncrit] = r
                ncrit += 1
        r = self.crit[_pick(u[0], ncrit)]
        if u[1] < 0.5:
            i = self.pi[r]
        else:
            i = self.pj[r]
        if self.mutation == ONED:
            for d in range(self.k):
                c = self.coords[i, d]
                if c > 0:
                    self.nbr_j[nn] = self.pos[d, c - 1]
                    self.nbr_d[nn] = d
                    nn += 1
                if c < self.n - 1:
                    self.nbr_j[nn] = self.pos[d, c + 1]
                    self.nbr_d[nn] = d
                    nn += 1
            r = _pick(u[2], nn)
            oi[0] = i
            oj[0] = self.nbr_j[r]
            od[0] = self.nbr_d[r]
            return
        j = _pick(u[2], self.n - 1)
        if j >= i:
            j += 1
        if self.mutation == M2:
            d = _pick(u[3], self.k)
        else:
            for d in range(self.k):
                s = self._dmin_after(i, j, d)
                if s > best_s:
                    best_s = s
                    nd = 0
                if s == best_s:
                    self.m3_dims[nd] = d
                    nd += 1
            d = self.m3_dims[_pick(u[4], nd)]
        oi[0] = i
        oj[0] = j
        od[0] = d

    def propose(self, u):
        cdef double[::1] uu = np.ascontiguousarray(u, dtype=np.float64)
        cdef i64 i, j, d
        self._propose(&uu[0], &i, &j, &d)
        return int(i), int(j), int(d)

    def dmin_after(self, i64 i, i64 j, i64 d):
        return int(self._dmin_after(i, j, d))

    def apply(self, i64 i, i64 j, i64 d):
        self._swap(i, j, d, 1)

    # -- main loop -----------------------------------------------------------

    def run(self, double[:, ::1] u, double[::1] temps):
        cdef i64 it, m = u.shape[0], t
        cdef i64 i = 0, j = 0, d = 0, slo = 0, shi = -1
        cdef double e_old, e_new, de, saved, T
        cdef bint acc
        with nogil:
            for it in range(m):
                T = temps[it]
                self._propose(&u[it, 0], &i, &j, &d)
                if self.evalkind == PSI_SUB:
                    for t in range(self.subsample):
                        self.refs[t] = _pick(u[it, 6 + t], self.npairs)
                    e_old = self._energy_sub()
                else:
                    e_old = self.e_cur
                saved = self.sumf
                if self.evalkind == PSI:
                    self._touched_range(i, j, d, &slo, &shi)
                    if shi >= slo:
                        memcpy(&self.S_saved[slo], &self.S[slo], (shi - slo + 1) * sizeof(double))
                self._swap(i, j, d, 1)
                e_new = self._energy()
                de = e_new - e_old
                if de <= 0:
                    acc = 1
                else:
                    self.worse += 1
                    self.worse_de_sum += de
                    if T > 0:
                        acc = u[it, 5] < exp(-de / T)
                    else:
                        acc = 0
                self.iterations += 1
                if acc:
                    self.accepted += 1
                    if de > 0:
                        self.worse_accepted += 1
                    self.e_cur = e_new
                    if self.dmin > self.best_dmin:
                        self.best_dmin = self.dmin
                        for t in range(self.n):
                            for d in range(self.k):
                                self.best[t, d] = self.coords[t, d]
                else:
                    self._swap(i, j, d, 0)
                    self.sumf = saved
                    if self.evalkind == PSI and shi >= slo:
                        memcpy(&self.S[slo], &self.S_saved[slo], (shi - slo + 1) * sizeof(double))

    # -- state export --------------------------------------------------------

    def get_coords(self):
        return np.asarray(self.coords).copy()

    def get_best(self):
        return np.asarray(self.best).copy()

    def get_dsq(self):
        return np.asarray(self.dsq).copy()

    def get_cnt(self):
        return np.asarray(self.cnt).copy()

    def get_S(self):
        return np.asarray(self.S).copy()

    def energy(self):
        return self._energy()
