"""Output tables and file writing."""

from nondetlab.recorder.table_writer import TableSet, atomic_write, read_table, render_table

__all__ = ["TableSet", "atomic_write", "read_table", "render_table"]
