def upper_case(word):
    return word.upper()
