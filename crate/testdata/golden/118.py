def strip_spaces(raw):
    return raw.strip()
