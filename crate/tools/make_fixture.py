"""Generate the bundled synthetic subway-lines dataset.

The layout is tuned so interchange geometry separates the two radio classes:
platforms on crossing lines sit 14-24 m apart (inside Wi-Fi range, outside
Bluetooth range) except on the hub row E, while shared terminal yards park
trains of different lines 12-27 m apart. Regenerate with:

    python3 tools/make_fixture.py [output.geojson]
"""

import json
import math
import sys

R = 6371000.0
LON0, LAT0 = -73.95, 40.75
COS0 = math.cos(math.radians(LAT0))

def ll(x, y):
    lon = LON0 + math.degrees(x / (R * COS0))
    lat = LAT0 + math.degrees(y / R)
    return [round(lon, 9), round(lat, 9)]

features = []

def line(name, pts, kind=None):
    props = {"name": name}
    if kind: props["kind"] = kind
    features.append({
        "type": "Feature",
        "properties": props,
        "geometry": {"type": "LineString", "coordinates": [ll(x, y) for x, y in pts]},
    })

def multiline(name, parts, kind=None):
    props = {"name": name}
    if kind: props["kind"] = kind
    features.append({
        "type": "Feature",
        "properties": props,
        "geometry": {"type": "MultiLineString",
                     "coordinates": [[ll(x, y) for x, y in part] for part in parts]},
    })

# Six trunk lines run straight between y = -13200 and 13200 (stations every
# 800 m on the shared row grid, express stops on the 2400 m sub-grid), then
# funnel into shared terminal yards. Yard berths are 12 m apart: parked
# trains of different lines sit inside Wi-Fi range but outside Bluetooth.
berths = [
    (11988.0, 0.0), (12000.0, 0.0), (12012.0, 0.0),
    (11988.0, 12.0), (12000.0, 12.0), (12012.0, 12.0),
]
trunk_x = [0.0, 4800.0, 9600.0, 14400.0, 19200.0, 24000.0]
for i, (name, x) in enumerate(zip(["A", "B", "C", "D", "H", "J"], trunk_x)):
    bx, by = berths[i]
    line(name, [
        (bx, -16800.0 - by),
        (x, -13200.0),
        (x, 13200.0),
        (bx, 16800.0 + by),
    ])

# E is the hub row: its platforms sit 14 m from the trunk platforms, so both
# radio classes can bridge dwelling trains there.
line("E", [(-7186.0, -7200.0), (31214.0, -7200.0)])

# F keeps 16 m row offset and 18 m platform shift: interchange platforms are
# ~24 m apart, inside Wi-Fi range but outside Bluetooth range.
line("F", [(-7182.0, 2416.0), (31218.0, 2416.0)])

# Crosstown line with a 3.6 km service gap.
multiline("G", [
    [(-7182.0, 9616.0), (9618.0, 9616.0)],
    [(13218.0, 9616.0), (31218.0, 9616.0)],
])

# Express diagonals, unaligned with the station grids.
line("X", [(-6000.0, -15000.0), (28800.0, 12000.0)], kind="express")
line("Y", [(30000.0, -13200.0), (-6000.0, 10800.0)], kind="express")

doc = {"type": "FeatureCollection", "features": features}
out = sys.argv[1] if len(sys.argv) > 1 else "data/sample_lines.geojson"
with open(out, "w") as f:
    json.dump(doc, f, indent=1)
    f.write("\n")
print(f"wrote {len(features)} features to {out}")
