def key_list(d):
    return sorted(d.keys())
