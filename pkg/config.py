import os
from dotenv import load_dotenv

# 加载环境变量
load_dotenv()

# 并行与日志
BADWEAVE_THREADS = int(os.getenv('BADWEAVE_THREADS', '1'))
LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')
LOG_DIR = os.getenv('LOG_DIR', '')

# 默认输出目录
OUTPUT_DIR = os.getenv('OUTPUT_DIR', 'output')

# 构造设置（桌面规模默认值）
CONSTRUCTION_SETTINGS = {
    'pairs': ['1/2,1/2'],
    'theta': 'sqrt(2)',
    'R': 16,
    'depth': 3,
    'epsilon': None,      # None 表示按模式推导
    'trim': 'desk',       # desk | full | 非负整数
    'desk_trim': 0,       # desk 模式下每端裁剪的子区间数
    'schedule': 'finite', # finite | countable
    'truncation': 2,      # 可数调度截断 T
    'c1': None,           # 覆盖 c₁（必须满足约束）
    'seal': True          # 证书前对最深层再做一次移除检查
}

# 验证设置
VERIFICATION_SETTINGS = {
    'Q': 10000,                 # check_simultaneous 的 q 上界
    'Hmax': 4096,               # check_dual 的高度上界
    'node_cap': 2_000_000,      # 见证搜索的节点上限
    'badness_Q': 10000,         # c(θ) 的暴力扫描上界
    'badness_denominator': 32   # c(θ) 向下取整的分母上限
}

# 随机扫描设置
SWEEP_SETTINGS = {
    'seed': 20240611,
    'trials': 100,
    'adversary_trials': 1000,
    'windows': 10000,
    'strategy': 'avoid',
    'q_max': 500,                 # 鸽笼扫描的 q 上界
    'transfer_trials': 1000,
    'transfer_denominator': 50,
    'transfer_c': '1/100'
}
