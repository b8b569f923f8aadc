from .commands import cmd_analytic, cmd_simulate, cmd_error_scan, cmd_optimize, cmd_reduce
from .output import write_csv, read_csv, write_record, read_record

__all__ = [
    'cmd_analytic', 'cmd_simulate', 'cmd_error_scan', 'cmd_optimize', 'cmd_reduce',
    'write_csv', 'read_csv', 'write_record', 'read_record',
]
