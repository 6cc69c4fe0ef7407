def unicode_names(élève):
    été = élève * 2
    return été
