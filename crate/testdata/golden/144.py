def strip_spaces(label):
    return label.lstrip().rstrip()
