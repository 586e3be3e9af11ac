# Triwell plot-script templates
