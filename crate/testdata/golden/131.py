def to_lower(word):
    return ''.join(ch.lower() for ch in word)
