"""Pure-Python annealing kernel.

Same state layout and floating-point operation order as the compiled
``_ckernel.CKernel``; used when the extension is not built, and as the
reference the compiled kernel is checked against.
"""
import math

import numpy as np

M2, M3, ONED = 0, 1, 2
NEGDMIN, PHI, PSI, PSI_SUB = 0, 1, 2, 3


def _pick(u, count):
    r = int(u * count)
    return count - 1 if r >= count else r


class PyKernel:
    def __init__(self, coords, mutation, evalkind, p, ftab, ktab, window, subsample):
        coords = np.ascontiguousarray(coords, dtype=np.int64)
        n, k = coords.shape
        self.n, self.k = n, k
        self.maxd = k * (n - 1) * (n - 1)
        self.npairs = n * (n - 1) // 2
        self.mutation = int(mutation)
        self.evalkind = int(evalkind)
        self.p = float(p)
        self.inv_p = 1.0 / self.p
        self.window = int(window)
        self.subsample = int(subsample)
        self.sub_scale = float(self.npairs) / subsample if subsample > 0 else 0.0
        self.coords = coords.tolist()
        self.best = coords.tolist()
        self.ftab = [float(x) for x in np.asarray(ftab, dtype=np.float64)]
        self.ktab = [float(x) for x in np.asarray(ktab, dtype=np.float64)]
        half = np.zeros(self.maxd + 1)
        src = np.asarray(ktab, dtype=np.float64)[: self.maxd + 1]
        half[: len(src)] = src
        self.kpad = np.concatenate([half[::-1], half[1:]])
        iu, ju = np.triu_indices(n, 1)
        self.pi = iu.tolist()
        self.pj = ju.tolist()
        self.pos = [[0] * n for _ in range(k)]
        for i in range(n):
            for d in range(k):
                self.pos[d][self.coords[i][d]] = i
        diff = coords[:, None, :] - coords[None, :, :]
        self.dsq = np.einsum("abk,abk->ab", diff, diff).tolist()
        self.cnt = [0] * (self.maxd + 1)
        self.S = np.zeros(self.maxd + 1, dtype=np.float64)
        self.refs = [0] * max(self.subsample, 1)
        for a, b in zip(self.pi, self.pj):
            self.cnt[self.dsq[a][b]] += 1
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
        self.sumf = 0.0
        self.e_cur = 0.0
        self.resync()

    # -- bookkeeping ---------------------------------------------------------

    def resync(self):
        cnt, ftab = self.cnt, self.ftab
        self.sumf = 0.0
        if self.evalkind == PSI:
            self.S[:] = 0.0
        w, maxd = self.window, self.maxd
        for u in range(self.dmin, self.dmax + 1):
            if cnt[u] == 0:
                continue
            c = float(cnt[u])
            self.sumf += c * ftab[u]
            if self.evalkind == PSI:
                lo, hi = max(u - w, 0), min(u + w, maxd)
                self.S[lo:hi + 1] += c * self.kpad[lo + maxd - u:hi + maxd - u + 1]
        self.e_cur = self._energy()

    def _s_move(self, old, new):
        maxd = self.maxd
        lo = max(min(old, new) - self.window, 0)
        hi = min(max(old, new) + self.window, maxd)
        kp = self.kpad
        self.S[lo:hi + 1] += kp[lo + maxd - new:hi + maxd - new + 1] - kp[lo + maxd - old:hi + maxd - old + 1]

    def _touched_range(self, i, j, d):
        coords, dsq = self.coords, self.dsq
        a, b = coords[i][d], coords[j][d]
        lo, hi = self.maxd + 1, -1
        for l in range(self.n):
            if l == i or l == j:
                continue
            c = coords[l][d]
            for pt, oc, nc in ((i, a, b), (j, b, a)):
                old = dsq[pt][l]
                new = old - (oc - c) * (oc - c) + (nc - c) * (nc - c)
                if old != new:
                    lo = min(lo, old, new)
                    hi = max(hi, old, new)
        return max(lo - self.window, 0), min(hi + self.window, self.maxd)

    def _swap(self, i, j, d, with_s=True):
        coords, dsq, cnt, ftab = self.coords, self.dsq, self.cnt, self.ftab
        a, b = coords[i][d], coords[j][d]
        newmin, newmax = self.maxd + 1, -1
        coords[i][d] = b
        coords[j][d] = a
        self.pos[d][a] = j
        self.pos[d][b] = i
        kind = self.evalkind
        for l in range(self.n):
            if l == i or l == j:
                continue
            c = coords[l][d]
            for pt, oc, nc in ((i, a, b), (j, b, a)):
                old = dsq[pt][l]
                new = old - (oc - c) * (oc - c) + (nc - c) * (nc - c)
                if new == old:
                    continue
                dsq[pt][l] = new
                dsq[l][pt] = new
                cnt[old] -= 1
                cnt[new] += 1
                if kind == PHI:
                    self.sumf -= ftab[old]
                    self.sumf += ftab[new]
                elif with_s and kind == PSI:
                    self._s_move(old, new)
                if new < newmin:
                    newmin = new
                if new > newmax:
                    newmax = new
        if newmin < self.dmin:
            self.dmin = newmin
        else:
            while cnt[self.dmin] == 0:
                self.dmin += 1
        if newmax > self.dmax:
            self.dmax = newmax
        else:
            while cnt[self.dmax] == 0:
                self.dmax -= 1

    def _dmin_after(self, i, j, d):
        coords, dsq, cnt = self.coords, self.dsq, self.cnt
        a, b = coords[i][d], coords[j][d]
        lo = self.maxd + 1
        changes = []
        for l in range(self.n):
            if l == i or l == j:
                continue
            c = coords[l][d]
            for pt, oc, nc in ((i, a, b), (j, b, a)):
                old = dsq[pt][l]
                new = old - (oc - c) * (oc - c) + (nc - c) * (nc - c)
                cnt[old] -= 1
                cnt[new] += 1
                changes.append((old, new))
                if new < lo:
                    lo = new
        if lo < self.dmin:
            res = lo
        else:
            res = self.dmin
            while cnt[res] == 0:
                res += 1
        for old, new in changes:
            cnt[new] -= 1
            cnt[old] += 1
        return res

    def _energy(self):
        kind = self.evalkind
        if kind == NEGDMIN:
            return -math.sqrt(float(self.dmin))
        if kind == PHI:
            return self.sumf ** self.inv_p
        if kind == PSI:
            cnt, ftab, S = self.cnt, self.ftab, self.S
            acc = 0.0
            for v in range(self.dmin, self.dmax + 1):
                if cnt[v] != 0:
                    acc += float(cnt[v]) * ftab[v] / math.sqrt(float(S[v]))
            return acc ** self.inv_p
        return self._energy_sub()

    def _energy_sub(self):
        cnt, ftab, ktab = self.cnt, self.ftab, self.ktab
        refd = [self.dsq[self.pi[r]][self.pj[r]] for r in self.refs[: self.subsample]]
        acc = 0.0
        for v in range(self.dmin, self.dmax + 1):
            if cnt[v] == 0:
                continue
            s = 0.0
            for g in refd:
                s += ktab[abs(g - v)]
            s = s * self.sub_scale
            if s < 1.0:
                s = 1.0
            acc += float(cnt[v]) * ftab[v] / math.sqrt(s)
        return acc ** self.inv_p

    # -- proposals -----------------------------------------------------------

    def _propose(self, u):
        dsq, dmin = self.dsq, self.dmin
        crit = [r for r in range(self.npairs) if dsq[self.pi[r]][self.pj[r]] == dmin]
        r = crit[_pick(u[0], len(crit))]
        i = self.pi[r] if u[1] < 0.5 else self.pj[r]
        if self.mutation == ONED:
            nbrs = []
            for d in range(self.k):
                c = self.coords[i][d]
                if c > 0:
                    nbrs.append((self.pos[d][c - 1], d))
                if c < self.n - 1:
                    nbrs.append((self.pos[d][c + 1], d))
            j, d = nbrs[_pick(u[2], len(nbrs))]
            return i, j, d
        j = _pick(u[2], self.n - 1)
        if j >= i:
            j += 1
        if self.mutation == M2:
            return i, j, _pick(u[3], self.k)
        best_s, dims = -1, []
        for d in range(self.k):
            s = self._dmin_after(i, j, d)
            if s > best_s:
                best_s, dims = s, []
            if s == best_s:
                dims.append(d)
        return i, j, dims[_pick(u[4], len(dims))]

    def propose(self, u):
        return self._propose([float(x) for x in u])

    def dmin_after(self, i, j, d):
        return self._dmin_after(i, j, d)

    def apply(self, i, j, d):
        self._swap(i, j, d)

    # -- main loop -----------------------------------------------------------

    def run(self, u, temps):
        u = np.asarray(u, dtype=np.float64).tolist()
        temps = np.asarray(temps, dtype=np.float64).tolist()
        sub = self.evalkind == PSI_SUB
        for row, T in zip(u, temps):
            i, j, d = self._propose(row)
            if sub:
                for t in range(self.subsample):
                    self.refs[t] = _pick(row[6 + t], self.npairs)
                e_old = self._energy_sub()
            else:
                e_old = self.e_cur
            saved = self.sumf
            if self.evalkind == PSI:
                slo, shi = self._touched_range(i, j, d)
                s_saved = self.S[slo:shi + 1].copy()
            self._swap(i, j, d)
            e_new = self._energy()
            de = e_new - e_old
            if de <= 0:
                acc = True
            else:
                self.worse += 1
                self.worse_de_sum += de
                acc = row[5] < math.exp(-de / T) if T > 0 else False
            self.iterations += 1
            if acc:
                self.accepted += 1
                if de > 0:
                    self.worse_accepted += 1
                self.e_cur = e_new
                if self.dmin > self.best_dmin:
                    self.best_dmin = self.dmin
                    self.best = [list(r) for r in self.coords]
            else:
                self._swap(i, j, d, False)
                self.sumf = saved
                if self.evalkind == PSI:
                    self.S[slo:shi + 1] = s_saved

    # -- state export --------------------------------------------------------

    def get_coords(self):
        return np.array(self.coords, dtype=np.int64)

    def get_best(self):
        return np.array(self.best, dtype=np.int64)

    def get_dsq(self):
        return np.array(self.dsq, dtype=np.int64)

    def get_cnt(self):
        return np.array(self.cnt, dtype=np.int64)

    def get_S(self):
        return self.S.copy()

    def energy(self):
        return self._energy()
