from typing import Optional


# 退出码约定（供脚本调用方使用，保持稳定）
EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_BAD_INPUT = 2
EXIT_NUMERICAL = 3
EXIT_ARTIFACT_MISMATCH = 4


class BaseAppException(Exception):
    """基础应用异常类"""
    def __init__(
        self,
        message: str = "An error occurred",
        exit_code: int = EXIT_UNEXPECTED,
        detail: Optional[str] = None
    ):
        super().__init__(detail or message)
        self.message = message
        self.exit_code = exit_code


# ==================== 配置错误 (exit 2) ====================


class ConfigError(BaseAppException):
    """配置错误：未知键、取值非法"""
    def __init__(self, message: str = "配置参数错误"):
        super().__init__(message=message, exit_code=EXIT_BAD_INPUT)


class InvalidConfig(ConfigError):
    """领域配置校验失败（SynthConfig / SplitSpec / TrainConfig 等）"""
    def __init__(self, message: str = "配置无效"):
        super().__init__(message=message)


# ==================== 输入错误 (exit 2) ====================


class InputError(BaseAppException):
    """输入数据或输入文件错误"""
    def __init__(self, message: str = "输入数据错误"):
        super().__init__(message=message, exit_code=EXIT_BAD_INPUT)


class BadMagic(InputError):
    """文件魔数不匹配"""
    def __init__(self, message: str = "文件魔数不匹配"):
        super().__init__(message)


class UnsupportedVersion(InputError):
    """文件版本不受支持"""
    def __init__(self, message: str = "文件版本不受支持"):
        super().__init__(message)


class TruncatedFile(InputError):
    """文件被截断"""
    def __init__(self, message: str = "文件被截断"):
        super().__init__(message)


class LengthMismatch(InputError):
    """信号长度或文件长度不一致"""
    def __init__(self, message: str = "长度不一致"):
        super().__init__(message)


class RaggedRows(InputError):
    """CSV 行长度不一致"""
    def __init__(self, row: int, expected: int, actual: int):
        super().__init__(f"CSV 第 {row} 行有 {actual} 列，期望 {expected} 列")
        self.row = row


class ParseError(InputError):
    """CSV 数值解析失败"""
    def __init__(self, row: int, column: int, text: str):
        super().__init__(f"CSV 第 {row} 行第 {column} 列无法解析为浮点数: {text!r}")
        self.row = row
        self.column = column


class InvalidEncoding(InputError):
    """文本不是合法的 UTF-8"""
    def __init__(self, message: str = "文本不是合法的 UTF-8"):
        super().__init__(message)


class InvalidScale(InputError):
    """小波尺度小于 1 个采样点"""
    def __init__(self, message: str = "尺度必须 >= 1 个采样点"):
        super().__init__(message)


class EmptyDataset(InputError):
    """训练集为空"""
    def __init__(self, message: str = "训练数据集为空"):
        super().__init__(message)


class EmptyErrors(InputError):
    """误差序列为空"""
    def __init__(self, message: str = "训练误差为空，无法计算阈值"):
        super().__init__(message)


class UnlabeledSample(InputError):
    """测试样本缺少 Baseline/Damage 标签"""
    def __init__(self, sample_id: str):
        super().__init__(f"样本 {sample_id} 未标注（需要 baseline 或 damage）")
        self.sample_id = sample_id


class InsufficientSamples(InputError):
    """请求的样本数超过可用数量"""
    def __init__(self, message: str = "可用样本不足"):
        super().__init__(message)


# ==================== 张量计算错误 ====================


class ShapeMismatch(BaseAppException):
    """张量形状不匹配"""
    def __init__(self, message: str = "张量形状不匹配"):
        super().__init__(message=message, exit_code=EXIT_BAD_INPUT)


class MissingCache(BaseAppException):
    """反向传播缺少前向缓存"""
    def __init__(self, message: str = "缺少前向缓存，无法反向传播"):
        super().__init__(message=message, exit_code=EXIT_BAD_INPUT)


# ==================== 数值错误 (exit 3) ====================


class NumericalError(BaseAppException):
    """数值计算失败"""
    def __init__(self, message: str = "数值计算失败"):
        super().__init__(message=message, exit_code=EXIT_NUMERICAL)


class NonFiniteLoss(NumericalError):
    """训练损失出现 NaN/Inf"""
    def __init__(self, epoch: int, batch: int):
        super().__init__(f"损失出现非有限值 - Epoch: {epoch}, Batch: {batch}")
        self.epoch = epoch
        self.batch = batch


# ==================== 产物不匹配 (exit 4) ====================


class ArtifactMismatch(BaseAppException):
    """检查点 / 阈值文件与当前架构或版本不匹配"""
    def __init__(self, message: str = "模型产物不匹配"):
        super().__init__(message=message, exit_code=EXIT_ARTIFACT_MISMATCH)
