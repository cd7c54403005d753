"""Print nicely formatted columns."""

from typing import Callable, List, Sequence, Union

Row = Union[str, Sequence[str]]


def align_cell(fmt: str, elem: str, width: int) -> str:
    """Returns an aligned element."""
    if fmt == '<':
        return elem + ' ' * (width - len(elem))
    if fmt == '>':
        return ' ' * (width - len(elem)) + elem
    return elem


def default_print(line: str) -> None:
    """Print routine used if none is supplied."""
    print(line)


def column_print(fmt: str, rows: List[Row], print_func: Callable[[str], None] = default_print) -> None:
    """Prints a formatted list, adjusting the width so everything fits.
    fmt contains a single character for each column. < indicates that the
    column should be left justified, > indicates that the column should
    be right justified. The last column may be a space which implies left
    justification and no padding.

    A row given as a single character string prints a separator line made
    of that character.

    """
    num_cols = len(fmt)
    width = [max((len(row[i]) for row in rows if not isinstance(row, str)), default=0)
             for i in range(num_cols)]
    for row in rows:
        if isinstance(row, str):
            print_func(' '.join(row * width[i] for i in range(num_cols)))
        else:
            print_func(' '.join(align_cell(fmt[i], row[i], width[i]) for i in range(num_cols)))


def columnize(items: List[str],
              display_width: int = 80,
              print_func: Callable[[str], None] = default_print) -> None:
    """Prints several columns of a single list (the way ls does), using as
    few rows as fit in display_width.

    """
    column_sep = '  '
    num_items = len(items)
    if not num_items:
        return
    nrows, column_width = num_items, [max(len(item) for item in items)]
    for rows in range(1, num_items + 1):
        ncols = (num_items + rows - 1) // rows
        widths = [max(len(item) for item in items[col * rows:(col + 1) * rows])
                  for col in range(ncols)]
        if sum(widths) + len(column_sep) * (ncols - 1) <= display_width:
            nrows, column_width = rows, widths
            break
    for row in range(nrows):
        line_items = [align_cell('<', items[i], column_width[i // nrows])
                      for i in range(row, num_items, nrows)]
        print_func(column_sep.join(line_items).rstrip())
