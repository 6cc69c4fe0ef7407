def commented(x):
    # leading comment
    y = x + 1  # trailing comment
    return y
