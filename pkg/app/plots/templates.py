"""
Gnuplot script templates for Triwell figures.
Each template is filled with .format(csv=..., output=...).
"""

# ============================================================
# SHARED PREAMBLE
# ============================================================

PREAMBLE = """set datafile separator ","
set terminal pngcairo size 800,600
set output "{output}"
set grid
"""


# ============================================================
# FIG 1: EQUILIBRIUM SWEEP
# ============================================================

FIG1_SCRIPT = PREAMBLE + """set title "Ground-mode components at equilibrium"
set xlabel "gbar / J"
set ylabel "|u_{{+-1,g}}|"
set xrange [0:0.3]
set yrange [0.4994:0.5]
plot "{csv}" skip 1 using 1:2 with linespoints title "|u_{{1g}}|", \\
     "{csv}" skip 1 using 1:3 with points title "|u_{{-1g}}|"
"""


# ============================================================
# FIG 2: FRAME AFTER THE QUENCH
# ============================================================

FIG2_SCRIPT = PREAMBLE + """set title "Ground-mode components after the quench"
set xlabel "tJ"
set ylabel "|v_{{+-1,g}}(t)|"
set xrange [0:*]
set yrange [0.498:0.502]
plot "{csv}" skip 1 using 1:2 with lines title "|v_{{1g}}|", \\
     "{csv}" skip 1 using 1:3 with lines dashtype 2 title "|v_{{-1g}}|"
"""


# ============================================================
# FIG 3: OCCUPATIONS
# ============================================================

FIG3A_SCRIPT = PREAMBLE + """set title "Mode occupations"
set xlabel "tJ"
set ylabel "n_l(t)"
set logscale y
plot "{csv}" skip 1 using 1:2 with lines title "n_g", \\
     "{csv}" skip 1 using 1:3 with lines title "n_o", \\
     "{csv}" skip 1 using 1:4 with lines title "n_e"
"""

FIG3B_SCRIPT = PREAMBLE + """set title "Relaxation of the ground-mode occupation"
set xlabel "tJ"
set ylabel "|n_g(t) - n_g(inf)|"
set logscale y
set format y "10^{{%L}}"
set xrange [0:*]
set yrange [1e-4:1e0]
plot "{csv}" skip 1 using 1:2 with lines title "|n_g - n_g(t_max)|"
"""


# Figure name -> (CSV it reads, script template)
FIGURES = {
    "fig1": ("fig1.csv", FIG1_SCRIPT),
    "fig2": ("fig2.csv", FIG2_SCRIPT),
    "fig3a": ("fig3a.csv", FIG3A_SCRIPT),
    "fig3b": ("fig3b.csv", FIG3B_SCRIPT),
}
