"""
区间编号集合
把第 n 层的区间编号集合存成有序、不相交、互不相邻的半开区段 [start, stop)。
第 n 层编号 k 对应闭区间 [k·c₁R^{-n}, (k+1)·c₁R^{-n}]。
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from itertools import accumulate
from typing import Iterable, Iterator, List, Sequence, Tuple

Run = Tuple[int, int]


class IndexRuns:
    """以区段编码的非负整数集合，支持并、交、差和父子映射"""

    __slots__ = ('_starts', '_stops', '_prefix')

    def __init__(self, runs: Iterable[Run] = (), normalized: bool = False):
        if not normalized:
            runs = _merge(sorted((s, e) for s, e in runs if e > s))
        starts: List[int] = []
        stops: List[int] = []
        for start, stop in runs:
            starts.append(start)
            stops.append(stop)
        self._starts = starts
        self._stops = stops
        # _prefix[i] 为前 i 个区段的元素总数
        self._prefix = [0] + list(accumulate(e - s for s, e in zip(starts, stops)))

    @classmethod
    def from_range(cls, start: int, stop: int) -> 'IndexRuns':
        return cls([(start, stop)] if stop > start else [], normalized=True)

    @classmethod
    def from_indices(cls, indices: Iterable[int]) -> 'IndexRuns':
        return cls((k, k + 1) for k in indices)

    # 基本查询 -----------------------------------------------------------

    def runs(self) -> Iterator[Run]:
        return zip(self._starts, self._stops)

    @property
    def run_count(self) -> int:
        return len(self._starts)

    def __len__(self) -> int:
        return self._prefix[-1]

    @property
    def count(self) -> int:
        return self._prefix[-1]

    def __bool__(self) -> bool:
        return bool(self._starts)

    def __eq__(self, other) -> bool:
        if not isinstance(other, IndexRuns):
            return NotImplemented
        return self._starts == other._starts and self._stops == other._stops

    def __hash__(self):
        return hash((tuple(self._starts), tuple(self._stops)))

    def __contains__(self, k: int) -> bool:
        pos = bisect_right(self._starts, k) - 1
        return pos >= 0 and k < self._stops[pos]

    def __iter__(self) -> Iterator[int]:
        for start, stop in self.runs():
            yield from range(start, stop)

    def __repr__(self) -> str:
        shown = ', '.join(f"[{s},{e})" for s, e in list(self.runs())[:4])
        more = '' if self.run_count <= 4 else f', ... ({self.run_count} 段)'
        return f"IndexRuns({shown}{more}; {self.count} 个)"

    def first(self) -> int:
        if not self._starts:
            raise IndexError("空集合没有首元素")
        return self._starts[0]

    def last(self) -> int:
        if not self._starts:
            raise IndexError("空集合没有末元素")
        return self._stops[-1] - 1

    def nth(self, i: int) -> int:
        """按升序的第 i 个元素（0 起）"""
        if not 0 <= i < self.count:
            raise IndexError(i)
        pos = bisect_right(self._prefix, i) - 1
        return self._starts[pos] + (i - self._prefix[pos])

    def ordinal(self, k: int) -> int:
        """k 所在区段的序号；k 不在集合中时抛出 KeyError"""
        pos = bisect_right(self._starts, k) - 1
        if pos < 0 or k >= self._stops[pos]:
            raise KeyError(k)
        return pos

    def count_in(self, lo: int, hi: int) -> int:
        """[lo, hi) 内的元素个数"""
        if hi <= lo or not self._starts:
            return 0
        return self._rank(hi) - self._rank(lo)

    def _rank(self, k: int) -> int:
        # 小于 k 的元素个数
        pos = bisect_right(self._starts, k) - 1
        if pos < 0:
            return 0
        return self._prefix[pos] + min(k, self._stops[pos]) - self._starts[pos]

    def intersects_range(self, lo: int, hi: int) -> bool:
        return self.count_in(lo, hi) > 0

    def runs_in(self, lo: int, hi: int) -> Iterator[Run]:
        """与 [lo, hi) 相交的区段，裁剪到 [lo, hi)"""
        pos = max(bisect_right(self._starts, lo) - 1, 0)
        while pos < len(self._starts) and self._starts[pos] < hi:
            start, stop = max(self._starts[pos], lo), min(self._stops[pos], hi)
            if stop > start:
                yield start, stop
            pos += 1

    # 集合运算 -----------------------------------------------------------

    def union(self, other: 'IndexRuns') -> 'IndexRuns':
        return IndexRuns(_merge(_interleave(list(self.runs()), list(other.runs()))), normalized=True)

    def intersection(self, other: 'IndexRuns') -> 'IndexRuns':
        a, b = list(self.runs()), list(other.runs())
        out: List[Run] = []
        i = j = 0
        while i < len(a) and j < len(b):
            start, stop = max(a[i][0], b[j][0]), min(a[i][1], b[j][1])
            if stop > start:
                out.append((start, stop))
            if a[i][1] < b[j][1]:
                i += 1
            else:
                j += 1
        return IndexRuns(_merge(out), normalized=True)

    def difference(self, other: 'IndexRuns') -> 'IndexRuns':
        out: List[Run] = []
        b = list(other.runs())
        j = 0
        for start, stop in self.runs():
            while j < len(b) and b[j][1] <= start:
                j += 1
            cursor = start
            k = j
            while k < len(b) and b[k][0] < stop:
                if b[k][0] > cursor:
                    out.append((cursor, b[k][0]))
                cursor = max(cursor, b[k][1])
                k += 1
            if cursor < stop:
                out.append((cursor, stop))
        return IndexRuns(out, normalized=True)

    def issubset(self, other: 'IndexRuns') -> bool:
        return not self.difference(other)

    # 层间映射 -----------------------------------------------------------

    def children(self, R: int) -> 'IndexRuns':
        """每个编号 k 细分为 kR, …, kR+R−1"""
        return IndexRuns(((s * R, e * R) for s, e in self.runs()), normalized=True)

    def parents(self, R: int) -> 'IndexRuns':
        return IndexRuns(_merge([(s // R, (e - 1) // R + 1) for s, e in self.runs()]), normalized=True)

    def end_blocks(self, size: int, trim: int) -> 'IndexRuns':
        """
        对每个出现的大小为 size 的祖先块，给出两端各 trim 个位置

        Args:
            size: 祖先块包含的子区间数（R^{m}）
            trim: 每端的位置数
        """
        if trim <= 0:
            return IndexRuns()
        if 2 * trim >= size:
            return self.parents(size).children(size)
        ranges: List[Run] = []
        for ancestor in self.parents(size):
            base = ancestor * size
            ranges.append((base, base + trim))
            ranges.append((base + size - trim, base + size))
        return IndexRuns(ranges, normalized=True)

    def parent_counts(self, R: int) -> Iterator[Tuple[int, int, int]]:
        """
        按父编号汇总子元素个数

        Yields:
            (父编号起, 父编号止, 每个父编号下的子元素个数)，只列出个数 ≥ 1 的父编号
        """
        current, pending = None, 0
        for start, stop in self.runs():
            first_parent, last_parent = start // R, (stop - 1) // R
            if first_parent == last_parent:
                if current == first_parent:
                    pending += stop - start
                else:
                    if current is not None:
                        yield current, current + 1, pending
                    current, pending = first_parent, stop - start
                continue
            head = (first_parent + 1) * R - start
            if current == first_parent:
                head += pending
            elif current is not None:
                yield current, current + 1, pending
            yield first_parent, first_parent + 1, head
            if last_parent > first_parent + 1:
                yield first_parent + 1, last_parent, R
            current, pending = last_parent, stop - last_parent * R
        if current is not None:
            yield current, current + 1, pending

    def parents_with_at_least(self, R: int, threshold: int) -> 'IndexRuns':
        """子元素个数 ≥ threshold 的父编号"""
        return IndexRuns(((lo, hi) for lo, hi, n in self.parent_counts(R) if n >= threshold))

    def to_list(self) -> List[List[int]]:
        return [[s, e] for s, e in self.runs()]


def _interleave(a: Sequence[Run], b: Sequence[Run]) -> List[Run]:
    out: List[Run] = []
    i = j = 0
    while i < len(a) or j < len(b):
        if j >= len(b) or (i < len(a) and a[i] <= b[j]):
            out.append(a[i])
            i += 1
        else:
            out.append(b[j])
            j += 1
    return out


def _merge(sorted_runs: Iterable[Run]) -> List[Run]:
    # 合并重叠或相邻的区段
    out: List[Run] = []
    for start, stop in sorted_runs:
        if stop <= start:
            continue
        if out and start <= out[-1][1]:
            if stop > out[-1][1]:
                out[-1] = (out[-1][0], stop)
        else:
            out.append((start, stop))
    return out
