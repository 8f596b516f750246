"""
Disjoint Set Forest
File: utils/union_find.py
"""

import numpy as np


class DisjointSet:
    """Union-find over the integers 0..size-1 with path compression and union by rank"""

    def __init__(self, size):
        self.parent = np.arange(size, dtype=np.intp)
        self.rank = np.zeros(size, dtype=np.int8)

    def __len__(self):
        return len(self.parent)

    def find(self, item):
        parent = self.parent
        root = item
        while parent[root] != root:
            root = parent[root]
        while parent[item] != root:
            parent[item], item = root, parent[item]
        return int(root)

    def merge(self, first, second):
        """Join the sets of first and second; False if they were already joined"""
        first = self.find(first)
        second = self.find(second)
        if first == second:
            return False
        if self.rank[first] < self.rank[second]:
            first, second = second, first
        self.parent[second] = first
        if self.rank[first] == self.rank[second]:
            self.rank[first] += 1
        return True

    def merge_all(self, firsts, seconds):
        for first, second in zip(firsts, seconds):
            self.merge(int(first), int(second))

    def connected(self, first, second):
        return self.find(first) == self.find(second)
