# native-fwa: preset=baseline fw_size=5 sp_size=20 init_amp=5 max_iter=200 mutation_rate=0.2 stall_limit=10
import numpy as np


class FWA:
    def __init__(self, evaluator, n, fw_size=5, sp_size=20, init_amp=5, max_iter=200, mutation_rate=0.2, seed=0):
        self.evaluator = evaluator
        self.n = n
        self.fw_size = fw_size
        self.sp_size = sp_size
        self.init_amp = init_amp
        self.max_iter = max_iter
        self.mutation_rate = mutation_rate
        self.rng = np.random.default_rng(seed)
        self.silent = 0

    def fitness(self, perm):
        return self.evaluator.compute(list(perm))

    def initialize(self):
        pop = [tuple(self.rng.permutation(self.n)) for _ in range(self.fw_size)]
        return [(p, self.fitness(p)) for p in pop]

    def move(self, perm):
        perm = list(perm)
        i, j = sorted(self.rng.choice(self.n, size=2, replace=False))
        kind = self.rng.integers(3)
        if kind == 0:
            perm[i], perm[j] = perm[j], perm[i]
        elif kind == 1:
            perm.insert(j, perm.pop(i))
        else:
            perm[i:j + 1] = reversed(perm[i:j + 1])
        return tuple(perm)

    def explode(self, firework, amp):
        sparks = set()
        for _ in range(max(1, self.sp_size // self.fw_size)):
            spark = firework
            for _ in range(self.rng.integers(1, amp + 1)):
                spark = self.move(spark)
            if spark != firework:
                sparks.add(spark)
        return [(s, self.fitness(s)) for s in sorted(sparks)]

    def mutate(self, sparks):
        count = max(1, int(len(sparks) * self.mutation_rate)) if sparks else 0
        picked = self.rng.choice(len(sparks), size=min(count, len(sparks)), replace=False) if sparks else []
        seen = {s for s, _ in sparks}
        out = []
        for k in picked:
            m = self.move(sparks[k][0])
            if m not in seen:
                seen.add(m)
                out.append((m, self.fitness(m)))
        return out

    def select(self, candidates):
        candidates = sorted(candidates, key=lambda c: c[1])
        chosen, seen = [], set()
        for perm, fit in candidates:
            if perm not in seen:
                chosen.append((perm, fit))
                seen.add(perm)
            if len(chosen) == self.fw_size:
                return chosen
        for c in candidates:
            if len(chosen) == self.fw_size:
                break
            chosen.append(c)
        return chosen

    def optimize(self):
        pop = self.initialize()
        best = min(f for _, f in pop)
        for _ in range(self.max_iter):
            if self.evaluator.stop():
                break
            fits = np.array([f for _, f in pop], dtype=float)
            finite = fits[np.isfinite(fits)]
            max_fit = finite.max() if finite.size and finite.max() > 0 else None
            sparks = []
            for (perm, fit) in pop:
                scale = 1.0 if max_fit is None or not np.isfinite(fit) else 1.5 - fit / max_fit
                amp = int(np.clip(int(self.init_amps_scaled(scale)), 1, self.fw_size))
                sparks += self.explode(perm, amp)
            mutants = self.mutate(sparks)
            pop = self.select(pop + sparks + mutants)
            current = min(f for _, f in pop)
            if current < best:
                best, self.silent = current, 0
            else:
                self.silent += 1
                if self.silent >= 10:
                    break
        return self.evaluator.get_best_solution(), self.evaluator.get_best_fitness()

    def init_amps_scaled(self, scale):
        return self.init_amp * (1.0 if scale is None else scale)
