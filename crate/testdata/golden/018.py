def lower_case(path):
    return path.lower()
