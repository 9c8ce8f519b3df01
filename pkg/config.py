from dotenv import load_dotenv
import os

# 加载.env文件
load_dotenv()

# 版本信息，写入每一份报告
VERSION = 'v0.4.0'
REPORT_VERSION = 1

'''
数值容差（所有等式校验的默认 τ）
注意：数学参数不从环境变量读取，只能通过命令行 --tol 修改
'''
TOLERANCE = 1e-9

# 秩/核判定使用的主元阈值（浮点模式），与用户可见的 τ 分开
PIVOT_TOLERANCE = 1e-12


############################
#     高级设置，请谨慎修改！  #
############################

'''
按块并行求解时的线程数。块之间互相独立，结果按块序号合并，线程数不影响输出。
'''
SOLVER_THREADS = int(os.getenv('SOLVER_THREADS', '4'))

'''
穷举验证（oracle）允许的最大分配数 p^m
'''
ENUMERATION_BUDGET = int(os.getenv('ENUMERATION_BUDGET', str(2 ** 24)))

'''
原子模式取整后的改进：块内分配数 p^c 不超过该值时穷举整个块，否则做单元移动/交换的局部下降
'''
ROUNDING_SEARCH_BUDGET = int(os.getenv('ROUNDING_SEARCH_BUDGET', str(2 ** 14)))

# 日志配置
LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')
LOG_DIR = os.getenv('LOG_DIR', 'logs')
LOG_MAX_BYTES = int(os.getenv('LOG_MAX_BYTES', '5000000'))
LOG_BACKUP_COUNT = int(os.getenv('LOG_BACKUP_COUNT', '3'))
