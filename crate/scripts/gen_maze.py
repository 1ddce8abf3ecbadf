"""Generate the bundled 20 m x 11 m office-style maze at 0.05 m/cell.

Row 0 is y = 0. Rooms and furniture are deliberately irregular: mirror-image
shadows produce frontier clusters of identical size, which a real office
rarely does.
"""
import sys

RES = 0.05
ROWS, COLS = 220, 400
W = 3  # wall thickness in cells

g = [["." for _ in range(COLS)] for _ in range(ROWS)]


def fill(x0, y0, x1, y1, ch):
    for r in range(max(m(y0), 0), min(m(y1), ROWS)):
        for c in range(max(m(x0), 0), min(m(x1), COLS)):
            g[r][c] = ch


def wall_cells(r0, c0, r1, c1):
    for r in range(max(r0, 0), min(r1, ROWS)):
        for c in range(max(c0, 0), min(c1, COLS)):
            g[r][c] = "#"


def m(x):
    return int(round(x / RES))


# outer boundary
wall_cells(0, 0, W, COLS)
wall_cells(ROWS - W, 0, ROWS, COLS)
wall_cells(0, 0, ROWS, W)
wall_cells(0, COLS - W, ROWS, COLS)

# corridor between y = 4.5 m and y = 6.5 m
wall_cells(m(4.5) - W, 0, m(4.5), COLS)
wall_cells(m(6.5), 0, m(6.5) + W, COLS)

# lower rooms (y < 4.5), partitions at uneven spacing
for x in (4.6, 10.3, 14.8):
    wall_cells(0, m(x), m(4.5), m(x) + W)
# upper rooms (y > 6.5)
for x in (7.1, 13.4):
    wall_cells(m(6.5), m(x), ROWS, m(x) + W)

# 1 m doors from the corridor
for x in (1.7, 6.1, 12.2, 17.3):
    fill(x, 4.5 - W * RES, x + 1.0, 4.5, ".")
for x in (2.6, 10.9, 15.4):
    fill(x, 6.5, x + 1.0, 6.5 + W * RES, ".")
# connecting door between two upper rooms
fill(13.4, 8.3, 13.4 + W * RES, 9.3, ".")

# furniture
fill(6.0, 1.3, 7.4, 2.6, "#")      # desk, off-center in its room
fill(8.6, 0.15, 9.4, 1.0, "#")     # cabinet against the wall
fill(3.4, 8.1, 4.6, 8.9, "#")      # table
fill(0.15, 9.6, 1.1, 10.85, "#")   # shelf in a corner
fill(16.6, 8.7, 18.4, 9.6, "#")    # desk
fill(11.2, 1.2, 12.0, 3.1, "#")    # partition stub
fill(16.1, 0.9, 16.5, 2.7, "#")    # narrow shelf

out = sys.stdout
out.write(f"{ROWS} {COLS} {RES}\n")
for row in g:
    out.write("".join(row) + "\n")
