def capitalize_all(word):
    return word.upper()
