def to_upper(text):
    return ''.join(ch.upper() for ch in text)
