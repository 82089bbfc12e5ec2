"""Reference transition values, kept as decimal strings.

Columns: n, a_f(n), x_f(n).  Entries carry 15 significant digits.
"""

TABLE1 = (
    (1000, "2.30183958971854", "436.380167908055"),
    (2000, "2.30074838075010", "872.743540008136"),
    (4000, "2.30020250313093", "1745.47034071250"),
    (5000, "2.30009330574014", "2181.83374672043"),
    (10000, "2.29987488908353", "4363.65078807689"),
    (12500, "2.29983120225165", "5454.55931101894"),
    (16000, "2.29979297531646", "6981.83124393025"),
    (20000, "2.29976566981568", "8727.28488210931"),
    (40000, "2.29971105744643", "17454.5530758350"),
    (50000, "2.29970013475374", "21818.1871732641"),
    (100000, "2.29967828914950", "43636.3576615316"),
)

# reference extrapolated limit (quadratic in 1/n through n = 40000, 50000, 100000)
A_CRITICAL = "2.29965644325"

# (n, x_f, a_f) for the two low-order transitions quoted to 3 decimals
SMALL_ORDER = {2: ("0.913", "3.138"), 3: ("1.344", "2.903")}

BUILTIN = {"table1": TABLE1}
