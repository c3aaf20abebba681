# 工具版本（写入运行清单）
TOOL_VERSION = "1.0.0"

# 噪声功率默认值（所有功率按噪声归一化）
DEFAULT_SIGMA2 = 1.0

# 数值容差
CDF_TOLERANCE = 1e-12
ROOT_TOLERANCE = 1e-12
BOX_TOLERANCE = 1e-10
ALPHA_TOLERANCE = 1e-9

# 内层内点法参数
BARRIER_FACTOR = 10.0
DUALITY_GAP = 1e-9
NEWTON_TOLERANCE = 1e-12
MAX_NEWTON_STEPS = 100
MAX_BARRIER_STAGES = 60
LINE_SEARCH_ALPHA = 0.25
LINE_SEARCH_BETA = 0.5

# 有效集 KKT 精化
KKT_TOLERANCE = 1e-12
KKT_MAX_STEPS = 50
FEASIBILITY_TOLERANCE = 1e-9
# 距上界小于该相对距离的坐标视为取到上界
UPPER_ACTIVE_TOLERANCE = 1e-6

# 外层功率分配搜索
ALPHA_GRID_POINTS = 64
GOLDEN_SECTION_TOLERANCE = 1e-9

# 蒙特卡洛仿真
DEFAULT_SEED = 2024
DEFAULT_TRIALS = 100000
WILSON_CONFIDENCE = 0.95
KS_LEVEL = 0.01
# 每个随机子流块内的复高斯样本总数（块大小 = 该值 // N）
BLOCK_SAMPLES = 2 ** 20
MIN_BLOCK_TRIALS = 64
CHANNEL_MODELS = ["antenna", "gamma"]

# 认证
MAC_IDENTITY = "HMAC-SHA256"
DEFAULT_KEY_HEX = "000102030405060708090a0b0c0d0e0f"
ATTACKER_MODES = ["legit", "forger"]

# CLI 退出码
EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG_ERROR = 2
EXIT_INFEASIBLE = 3

# 经验速率列 -> 对应试验次数列；低于 1/trials 时附加 "<1/trials" 展示列
RATE_DISPLAY_COLUMNS = {
    "p_em": "frames",
    "p_et": "tag_trials",
    "p_em_mc": "frames_mc",
    "p_et_mc": "tag_trials_mc",
    "acceptance_rate": "frames",
}

# 默认扫描网格
DEFAULT_BETA_GRID = {"start": 0.005, "stop": 1.0, "num": 200}
DEFAULT_DELTA_LIST = [1e-6]

# 输出文件
MANIFEST_FILENAME = "manifest.json"
EXCEL_FILENAME = "results.xlsx"
