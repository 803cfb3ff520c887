"""
단일 큐비트 클리포드 서비스
{X_π/2, X_π, 가상 Z} 게이트 단어로 24개 클리포드 표 생성, 무작위 벤치마킹 시퀀스 샘플링
"""

import logging
import math
from functools import lru_cache
from typing import Dict, List, NamedTuple, Sequence, Tuple

import numpy as np

from core.exceptions import DomainException
from schemas import GateSpec
from services.propagation import target_unitary

logger = logging.getLogger(__name__)

CLIFFORD_COUNT = 24
# 물리 게이트 단어 탐색 한도
MAX_PHYSICAL_GATES = 4

X90 = GateSpec(kind="physical", angle=math.pi / 2, axis=0.0, label="x90")
X180 = GateSpec(kind="physical", angle=math.pi, axis=0.0, label="x180")
PHYSICAL_GATES = (X90, X180)
Z_ANGLES = (0.0, math.pi / 2, math.pi, 3 * math.pi / 2)


class CliffordEntry(NamedTuple):
    """클리포드 원소와 게이트 단어 (시간 순서)"""

    index: int
    word: Tuple[GateSpec, ...]
    unitary: np.ndarray

    @property
    def physical_count(self) -> int:
        return sum(1 for g in self.word if g.duration_consuming)


def virtual_z(angle: float, dimension: int = 2) -> np.ndarray:
    """가상 Z 게이트 diag(e^{−ijα}), j = 0..d−1"""
    return np.diag(np.exp(-1j * angle * np.arange(dimension)))


def z_gate(angle: float) -> GateSpec:
    return GateSpec(kind="virtual_z", angle=angle, label="z")


def ideal_unitary(gate: GateSpec, dimension: int = 2) -> np.ndarray:
    """게이트의 이상적 유니터리 (물리 게이트는 2준위만)"""
    if gate.kind == "virtual_z":
        return virtual_z(gate.angle, dimension)
    if dimension != 2:
        raise DomainException("물리 게이트의 이상적 유니터리는 2준위에서만 정의됩니다.")
    return target_unitary(gate.angle, gate.axis)


def word_unitary(word: Sequence[GateSpec]) -> np.ndarray:
    """시간 순서 게이트 단어의 전체 유니터리"""
    u = np.eye(2, dtype=complex)
    for gate in word:
        u = ideal_unitary(gate) @ u
    return u


def canonical_key(u: np.ndarray, digits: int = 6) -> Tuple[float, ...]:
    """전역 위상을 제거한 유니터리 식별 키"""
    flat = np.asarray(u, dtype=complex).ravel()
    pivot = flat[np.argmax(np.abs(flat) > 0.1)]
    normalized = flat * (abs(pivot) / pivot)
    parts = np.concatenate([normalized.real, normalized.imag])
    return tuple(float(x) + 0.0 for x in np.round(parts, digits))


def _with_z(word: Tuple[GateSpec, ...], angle: float) -> Tuple[GateSpec, ...]:
    return word + (z_gate(angle),) if angle != 0.0 else word


@lru_cache(maxsize=1)
def clifford_table() -> Tuple[CliffordEntry, ...]:
    """
    24개 단일 큐비트 클리포드 표

    단어 Z^{a₀}·G₁·Z^{a₁}·…·G_n·Z^{a_n} 을 물리 게이트 수가 적은 순서로 너비 우선 탐색하여
    처음 발견되는 단어를 대표로 삼는다. 탐색 순서는 G ∈ (X_π/2, X_π), a ∈ (0, π/2, π, 3π/2).
    가상 Z는 시간을 소모하지 않는다.

    Returns:
        Tuple[CliffordEntry, ...]: 인덱스 0이 항등원
    """
    found: Dict[Tuple[float, ...], CliffordEntry] = {}
    frontier: List[Tuple[GateSpec, ...]] = []

    for angle in Z_ANGLES:
        word = _with_z((), angle)
        frontier.append(word)
        key = canonical_key(word_unitary(word))
        if key not in found:
            found[key] = CliffordEntry(len(found), word, word_unitary(word))

    for depth in range(1, MAX_PHYSICAL_GATES + 1):
        next_frontier = []
        for word in frontier:
            for gate in PHYSICAL_GATES:
                for angle in Z_ANGLES:
                    candidate = _with_z(word + (gate,), angle)
                    next_frontier.append(candidate)
                    u = word_unitary(candidate)
                    key = canonical_key(u)
                    if key not in found:
                        found[key] = CliffordEntry(len(found), candidate, u)
        if len(found) >= CLIFFORD_COUNT:
            break
        frontier = next_frontier

    if len(found) != CLIFFORD_COUNT:
        raise DomainException(f"클리포드 표 생성 실패: {len(found)}개 원소")
    table = tuple(sorted(found.values(), key=lambda e: e.index))
    mean_physical = sum(e.physical_count for e in table) / CLIFFORD_COUNT
    logger.debug(f"클리포드 표 생성: 클리포드당 평균 물리 게이트 {mean_physical:.3f}개")
    return table


@lru_cache(maxsize=1)
def _key_index() -> Dict[Tuple[float, ...], int]:
    return {canonical_key(e.unitary): e.index for e in clifford_table()}


def clifford_index(u: np.ndarray) -> int:
    """유니터리에 해당하는 클리포드 인덱스"""
    key = canonical_key(u)
    index = _key_index().get(key)
    if index is None:
        raise DomainException("주어진 유니터리는 클리포드 원소가 아닙니다.")
    return index


def recovery_index(indices: Sequence[int]) -> int:
    """시퀀스 전체를 항등원으로 되돌리는 클리포드 인덱스"""
    table = clifford_table()
    total = np.eye(2, dtype=complex)
    for i in indices:
        total = table[i].unitary @ total
    return clifford_index(total.conj().T)


def rb_sequence(length: int, rng: np.random.Generator) -> List[GateSpec]:
    """
    길이 M의 무작위 클리포드 시퀀스와 복구 게이트를 게이트 목록으로 펼침

    Args:
        length: 클리포드 수 M (복구 게이트 제외)
        rng: 시드가 고정된 난수 생성기
    """
    if length < 0:
        raise DomainException(f"시퀀스 길이는 0 이상이어야 합니다: {length}")
    table = clifford_table()
    indices = [int(i) for i in rng.integers(0, CLIFFORD_COUNT, size=length)]
    indices.append(recovery_index(indices))
    gates: List[GateSpec] = []
    for i in indices:
        gates.extend(table[i].word)
    return gates
