import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

import config
from .errors import InputError


@dataclass(frozen=True)
class Arith:
    """
    数值模式：64 位浮点（numpy float64 数组）或精确有理数（Fraction 对象数组）

    Args:
        exact (bool): 是否使用精确有理数
        tol (float): 等式校验容差 τ，精确模式下所有等式均按 == 判定
        pivot_tol (float): 浮点模式下的主元/核判定阈值
    """

    exact: bool = False
    tol: float = config.TOLERANCE
    pivot_tol: float = config.PIVOT_TOLERANCE

    @property
    def dtype(self):
        return object if self.exact else np.float64

    @property
    def zero(self):
        return Fraction(0) if self.exact else 0.0

    @property
    def one(self):
        return Fraction(1) if self.exact else 1.0

    def number(self, value):
        """把单个输入数值转换为当前模式下的数"""
        if isinstance(value, (bool, np.bool_)):
            raise InputError('数值不能是布尔值', repr(value))
        if isinstance(value, Fraction):
            return value if self.exact else float(value)
        if isinstance(value, (int, np.integer)):
            return Fraction(int(value)) if self.exact else float(value)
        if isinstance(value, (float, np.floating)):
            value = float(value)
            if not math.isfinite(value):
                raise InputError('数值必须是有限数', repr(value))
            # 十进制字面量按其十进制有理数解释：0.1 -> 1/10
            return Fraction(repr(value)) if self.exact else value
        if isinstance(value, str):
            try:
                frac = Fraction(value)
            except (ValueError, ZeroDivisionError) as e:
                raise InputError('无法解析的数值', repr(value)) from e
            return frac if self.exact else float(frac)
        raise InputError('不支持的数值类型', type(value).__name__)

    def half(self):
        return Fraction(1, 2) if self.exact else 0.5

    def ratio(self, num, den):
        return Fraction(num, den) if self.exact else num / den

    def array(self, values):
        """把（嵌套）序列转换为当前模式的 numpy 数组"""
        raw = np.array(values, dtype=object)
        if raw.size == 0:
            return raw.astype(self.dtype)
        converted = np.frompyfunc(self.number, 1, 1)(raw)
        converted = np.asarray(converted, dtype=object).reshape(raw.shape)
        if self.exact:
            return converted
        return converted.astype(np.float64)

    def zeros(self, shape):
        if self.exact:
            return np.full(shape, Fraction(0), dtype=object)
        return np.zeros(shape, dtype=np.float64)

    def full(self, shape, value):
        value = self.number(value)
        return np.full(shape, value, dtype=self.dtype)

    def is_zero(self, value, scale=1.0):
        if self.exact:
            return value == 0
        return abs(value) <= self.pivot_tol * max(1.0, float(scale))

    def max_abs(self, values):
        values = np.asarray(values)
        if values.size == 0:
            return self.zero
        if values.dtype == object:
            # 0 维对象数组的 np.abs 返回裸 Fraction，逐元素归约
            return max(abs(v) for v in values.flat)
        return np.abs(values).max()

    def close(self, lhs, rhs, tol=None):
        """所有分量之差是否在容差内（精确模式要求完全相等）"""
        diff = self.max_abs(np.asarray(lhs) - np.asarray(rhs))
        if self.exact:
            return diff == 0
        return float(diff) <= (self.tol if tol is None else tol)

    def within(self, value, bound):
        """value ≤ bound，浮点模式允许 τ 的余量"""
        if self.exact:
            return value <= bound
        return float(value) <= float(bound) + self.tol
