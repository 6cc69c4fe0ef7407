def lower_case(raw):
    return ''.join(ch.lower() for ch in raw)
