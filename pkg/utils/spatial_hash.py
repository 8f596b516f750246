"""
Uniform Spatial Hash Grid
File: utils/spatial_hash.py
"""

from collections import defaultdict

import numpy as np

# Half of the 8-neighbourhood plus the cell itself: every unordered pair of
# neighbouring cells is visited once.
_FORWARD_OFFSETS = ((0, 0), (1, -1), (1, 0), (1, 1), (0, 1))


class SpatialHashGrid:
    """Buckets planar points into square cells of side cell_size"""

    def __init__(self, points, cell_size):
        self.points = np.asarray(points, dtype=float).reshape(-1, 2)
        self.cell_size = float(cell_size)
        self.cells = defaultdict(list)
        if len(self.points) and self.cell_size > 0:
            keys = np.floor(self.points / self.cell_size).astype(np.int64)
            for index, (i, j) in enumerate(keys):
                self.cells[(int(i), int(j))].append(index)
        self.cells = {key: np.asarray(members, dtype=np.intp)
                      for key, members in self.cells.items()}

    def candidate_pairs(self):
        """All index pairs (i < j) whose points lie in the same or adjacent cells

        With cell_size at least the largest interaction distance, every pair
        of points closer than that distance is among the candidates.
        """
        firsts, seconds = [], []
        for (i, j), members in self.cells.items():
            for di, dj in _FORWARD_OFFSETS:
                others = self.cells.get((i + di, j + dj))
                if others is None:
                    continue
                if di == 0 and dj == 0:
                    a, b = np.triu_indices(len(members), k=1)
                    firsts.append(members[a])
                    seconds.append(members[b])
                else:
                    a, b = np.meshgrid(members, others, indexing='ij')
                    firsts.append(a.ravel())
                    seconds.append(b.ravel())
        if not firsts:
            empty = np.empty(0, dtype=np.intp)
            return empty, empty
        first = np.concatenate(firsts)
        second = np.concatenate(seconds)
        return np.minimum(first, second), np.maximum(first, second)
