# Variant comparison experiments
